//! Scalar non-Gaussianity scores for a whitened residual component:
//! the energy-distance statistic, the absolute excess kurtosis, and a
//! k-nearest-neighbor differential entropy estimate.

use rand::Rng;
use statrs::function::erf::erf;
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::rng;
use crate::transform::mean_and_variance;

/// Which score was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Method {
    Energy,
    Kurtosis,
    Entropy,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GaussianityScore {
    pub method: Method,
    pub value: f64,
    pub n: usize,
}

/// `E|Y - Y'|` for independent standard normals: `2/sqrt(pi)`.
pub const EXPECTED_ABS_NORMAL_PAIR: f64 = std::f64::consts::FRAC_2_SQRT_PI;

fn normal_cdf(a: f64) -> f64 {
    0.5 * (1.0 + erf(a / std::f64::consts::SQRT_2))
}

fn normal_pdf(a: f64) -> f64 {
    (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Closed form for `E|a - Y|` with `Y` standard normal:
/// `a (2 Phi(a) - 1) + 2 phi(a)`.
pub fn expected_abs_to_normal(a: f64) -> f64 {
    a * (2.0 * normal_cdf(a) - 1.0) + 2.0 * normal_pdf(a)
}

/// Sum over all ordered pairs of `|z_j - z_k|` via the sorted-sample
/// identity `2 * sum_i (2i - n - 1) z_(i)`.
fn pairwise_abs_sum(z: &[f64]) -> f64 {
    let n = z.len();
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        acc += (2.0 * (i + 1) as f64 - n as f64 - 1.0) * v;
    }
    2.0 * acc
}

/// Energy-distance statistic for the null "standard normal":
/// `N ( 2/N sum_j E|z_j - Y| - E|Y - Y'| - 1/N^2 sum_jk |z_j - z_k| )`.
/// Larger values mean larger deviation from Gaussianity.
pub fn energy_statistic(z: &[f64]) -> Result<GaussianityScore> {
    let n = z.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "energy statistic needs at least 2 points, got {n}"
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("sample must be finite".into()));
    }
    let nf = n as f64;
    let term1 = 2.0 / nf * z.iter().map(|&v| expected_abs_to_normal(v)).sum::<f64>();
    let term3 = pairwise_abs_sum(z) / (nf * nf);
    let value = nf * (term1 - EXPECTED_ABS_NORMAL_PAIR - term3);
    Ok(GaussianityScore { method: Method::Energy, value, n })
}

/// Absolute excess kurtosis `|m4 / m2^2 - 3|` with central sample moments.
pub fn kurtosis_score(z: &[f64]) -> Result<GaussianityScore> {
    let n = z.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "kurtosis needs at least 4 points, got {n}"
        )));
    }
    let (mean, m2) = mean_and_variance(z);
    if !(m2 > 0.0) {
        return Err(Error::DegenerateInput("sample has zero variance".into()));
    }
    let m4 = z.iter().map(|&v| (v - mean).powi(4)).sum::<f64>() / n as f64;
    Ok(GaussianityScore { method: Method::Kurtosis, value: (m4 / (m2 * m2) - 3.0).abs(), n })
}

pub const DEFAULT_KNN_K: usize = 10;

/// Kozachenko-Leonenko differential entropy estimate from k-nearest-neighbor
/// distances: `psi(N) - psi(k) + ln 2 + 1/N sum_i ln r_i`, with `r_i` the
/// distance from `z_i` to its k-th nearest neighbor.
pub fn knn_entropy(z: &[f64], k: usize) -> Result<GaussianityScore> {
    let n = z.len();
    if k == 0 {
        return Err(Error::InvalidArgument("neighbor count must be at least 1".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "entropy estimate needs more than k = {k} points, got {n}"
        )));
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        // Zero neighbor distances break the log; break ties with a
        // fixed-seed jitter far below the data scale.
        let sd = mean_and_variance(z).1.sqrt().max(f64::MIN_POSITIVE);
        let mut rng = rng::stream(0x6a69_7474, rng::tag::LAB);
        for v in sorted.iter_mut() {
            *v += 1e-10 * sd * (rng.random::<f64>() * 2.0 - 1.0);
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let mut log_sum = 0.0;
    for i in 0..n {
        let (mut lo, mut hi) = (i, i);
        for _ in 0..k {
            let dl = if lo > 0 { sorted[i] - sorted[lo - 1] } else { f64::INFINITY };
            let dr = if hi + 1 < n { sorted[hi + 1] - sorted[i] } else { f64::INFINITY };
            if dl <= dr {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let r = (sorted[i] - sorted[lo]).max(sorted[hi] - sorted[i]);
        log_sum += r.ln();
    }
    let value = digamma(n as f64) - digamma(k as f64) + 2f64.ln() + log_sum / n as f64;
    Ok(GaussianityScore { method: Method::Entropy, value, n })
}
