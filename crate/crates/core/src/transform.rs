//! Standardization and the probability integral transform.
//!
//! The transform maps one sample through its own empirical CDF and the other
//! sample's empirical quantile function, so both sides end up with the same
//! empirical distribution. Ranks use midranks, `(rank - 0.5)/N`, and the
//! quantile function interpolates linearly between order statistics.

use crate::error::{Error, Result};

/// A paired bivariate sample.
#[derive(Debug, Clone)]
pub struct SamplePair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labels: Option<(String, String)>,
}

impl SamplePair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "paired samples must have equal length, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        Ok(Self { x, y, labels: None })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Mean and population variance (divide by N) of a sample.
pub fn mean_and_variance(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Shift and scale to zero mean and unit population variance.
pub fn standardize(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InsufficientData("cannot standardize an empty sample".into()));
    }
    let (mean, var) = mean_and_variance(v);
    if !(var > 0.0) {
        return Err(Error::DegenerateInput("sample has zero variance".into()));
    }
    let sd = var.sqrt();
    Ok(v.iter().map(|x| (x - mean) / sd).collect())
}

/// Fraction of entries that duplicate an earlier entry: `(N - distinct) / N`.
pub fn tie_fraction(v: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let distinct = 1 + sorted.windows(2).filter(|w| w[1] > w[0]).count();
    (v.len() - distinct) as f64 / v.len() as f64
}

/// Midranks of a sample: tied values share the average of the ranks their
/// block occupies. Returned ranks are 1-based.
fn midranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = mid;
        }
        start = end;
    }
    ranks
}

/// Empirical quantile at probability `p`, interpolating linearly between
/// order statistics placed at probabilities `(j - 0.5)/N`.
fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p * n as f64 - 0.5;
    if pos <= 0.0 {
        return sorted[0];
    }
    if pos >= (n - 1) as f64 {
        return sorted[n - 1];
    }
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Default ceiling on the repeated-value fraction accepted by
/// [`pit_transform`].
pub const DEFAULT_TIES_THRESHOLD: f64 = 0.01;

/// Probability integral transform of `x` onto the empirical distribution of
/// `y`. Fails when either sample repeats more than `ties_threshold` of its
/// values, in which case the pair is unsuitable for rank-based matching.
pub fn pit_transform(x: &[f64], y: &[f64], ties_threshold: f64) -> Result<Vec<f64>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InsufficientData("empty sample in transform".into()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    for (name, v) in [("x", x), ("y", y)] {
        let tf = tie_fraction(v);
        if tf > ties_threshold {
            return Err(Error::ExcessiveTies(format!(
                "{name} repeats {:.2}% of its values (threshold {:.2}%)",
                tf * 100.0,
                ties_threshold * 100.0
            )));
        }
    }
    let n = x.len() as f64;
    let ranks = midranks(x);
    let mut y_sorted: Vec<f64> = y.to_vec();
    y_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ranks.iter().map(|r| empirical_quantile(&y_sorted, (r - 0.5) / n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_three_points() {
        let out = standardize(&[1.0, 2.0, 3.0]).unwrap();
        assert!((out[0] + 1.224745).abs() < 1e-6);
        assert!(out[1].abs() < 1e-12);
        assert!((out[2] - 1.224745).abs() < 1e-6);
    }

    #[test]
    fn standardize_moments() {
        let v: Vec<f64> = (0..101).map(|i| (i as f64 * 0.13).sin() * 4.0 + 2.0).collect();
        let out = standardize(&v).unwrap();
        let (m, var) = mean_and_variance(&out);
        assert!(m.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn standardize_is_idempotent() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64).cos()).collect();
        let once = standardize(&v).unwrap();
        let twice = standardize(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_affine_invariance() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let scaled: Vec<f64> = v.iter().map(|x| 3.5 * x - 2.0).collect();
        let a = standardize(&v).unwrap();
        let b = standardize(&scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_constant() {
        assert!(matches!(standardize(&[2.0; 5]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn pit_equal_size_rank_matching() {
        let out = pit_transform(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0], 0.01).unwrap();
        assert_eq!(out, vec![10.0, 20.0, 30.0]);
    }

    #[test]
    fn pit_identity_when_distributions_match() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.61).sin()).collect();
        let mut y = x.clone();
        y.reverse();
        let out = pit_transform(&x, &y, 0.01).unwrap();
        for (a, b) in out.iter().zip(&x) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn pit_invariant_under_monotone_map_of_x() {
        let x: Vec<f64> = (0..60).map(|i| (i as f64 * 0.17).sin() * 2.0).collect();
        let y: Vec<f64> = (0..60).map(|i| (i as f64 * 0.29).cos() * 3.0).collect();
        let warped: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let a = pit_transform(&x, &y, 0.01).unwrap();
        let b = pit_transform(&warped, &y, 0.01).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p, q);
        }
    }

    #[test]
    fn pit_preserves_rank_order() {
        let x: Vec<f64> = (0..80).map(|i| ((i * 37) % 80) as f64 / 7.0).collect();
        let y: Vec<f64> = (0..80).map(|i| ((i * 13) % 80) as f64).collect();
        let out = pit_transform(&x, &y, 0.01).unwrap();
        for i in 0..x.len() {
            for j in 0..x.len() {
                if x[i] < x[j] {
                    assert!(out[i] <= out[j]);
                }
            }
        }
    }

    #[test]
    fn pit_output_ks_distance_within_one_over_n() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 5.0).collect();
        let y: Vec<f64> = (0..100).map(|i| (i as f64 * 0.53).cos() * 2.0 + 1.0).collect();
        let out = pit_transform(&x, &y, 0.01).unwrap();
        let n = x.len();
        let mut a = out.clone();
        let mut b = y.clone();
        a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        b.sort_by(|p, q| p.partial_cmp(q).unwrap());
        // Two-sample KS distance on the pooled grid.
        let mut grid: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
        grid.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let cdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / n as f64;
        let ks = grid
            .iter()
            .map(|&t| (cdf(&a, t) - cdf(&b, t)).abs())
            .fold(0.0, f64::max);
        assert!(ks <= 1.0 / n as f64 + 1e-12, "ks = {ks}");
    }

    #[test]
    fn standardizing_first_commutes_up_to_an_affine_map() {
        // Standardizing both sides first rescales the transform output by
        // exactly the target's standardization.
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.71).sin() * 3.0 + 1.0).collect();
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).cos() * 5.0 - 2.0).collect();
        let raw = pit_transform(&x, &y, 0.01).unwrap();
        let transformed =
            pit_transform(&standardize(&x).unwrap(), &standardize(&y).unwrap(), 0.01).unwrap();
        let (my, vy) = mean_and_variance(&y);
        let sy = vy.sqrt();
        for (a, b) in raw.iter().zip(&transformed) {
            assert!(((a - my) / sy - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn pit_rejects_excessive_ties() {
        let mut x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        for i in 0..10 {
            x[i] = 0.0;
        }
        let y: Vec<f64> = (0..100).map(|i| i as f64 * 0.5).collect();
        assert!(matches!(pit_transform(&x, &y, 0.01), Err(Error::ExcessiveTies(_))));
    }

    #[test]
    fn tie_fraction_counts_duplicates() {
        assert_eq!(tie_fraction(&[1.0, 2.0, 3.0, 4.0]), 0.0);
        assert_eq!(tie_fraction(&[1.0, 1.0, 2.0, 2.0]), 0.5);
    }
}
