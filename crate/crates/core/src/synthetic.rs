//! Generators for the synthetic cause-effect processes and the benchmark
//! runner that scores inference accuracy against the known direction.
//!
//! All four noise distributions share the variance of the bimodal one,
//! `0.63^2 + 0.1^2 = 0.4069`; the generalized Gaussian scale is solved from
//! its moment identity and the other two are scaled directly.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::gaussianity::energy_statistic;
use crate::inference::{
    grid_search_cv, infer_direction, Direction, InferenceConfig,
};
use crate::kernel::{center_gram, GramMatrix};
use crate::regression::{preimage, residual_gram, KernelModel, PreimageOptions};
use crate::rng::{self, tag};
use crate::transform::{pit_transform, standardize, SamplePair};
use crate::whitening::whiten;

/// Common variance of every noise distribution.
pub const NOISE_VARIANCE: f64 = 0.4069;
/// Shape parameter of the generalized Gaussian noise.
pub const GG_SHAPE: f64 = 10.0;
/// Bimodal noise: mixture of normals at +-M with standard deviation S.
pub const BIMODAL_M: f64 = 0.63;
pub const BIMODAL_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    M1,
    M2,
    M3,
    M4,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [Mechanism::M1, Mechanism::M2, Mechanism::M3, Mechanism::M4];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::M1 => "M1",
            Mechanism::M2 => "M2",
            Mechanism::M3 => "M3",
            Mechanism::M4 => "M4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CauseDistribution {
    P1,
    P2,
    P3,
}

impl CauseDistribution {
    pub const ALL: [CauseDistribution; 3] =
        [CauseDistribution::P1, CauseDistribution::P2, CauseDistribution::P3];

    pub fn as_str(&self) -> &'static str {
        match self {
            CauseDistribution::P1 => "p1",
            CauseDistribution::P2 => "p2",
            CauseDistribution::P3 => "p3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseDistribution {
    GeneralizedGaussian,
    Laplace,
    Gaussian,
    Bimodal,
}

impl NoiseDistribution {
    pub const ALL: [NoiseDistribution; 4] = [
        NoiseDistribution::GeneralizedGaussian,
        NoiseDistribution::Laplace,
        NoiseDistribution::Gaussian,
        NoiseDistribution::Bimodal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseDistribution::GeneralizedGaussian => "gg",
            NoiseDistribution::Laplace => "laplace",
            NoiseDistribution::Gaussian => "gauss",
            NoiseDistribution::Bimodal => "bimodal",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub mechanism: Mechanism,
    pub cause: CauseDistribution,
    pub noise: NoiseDistribution,
    pub n: usize,
    pub seed: u64,
}

/// Draws from the selected cause density: standard normal, a two-component
/// mixture at +-1, or a three-component mixture at -1.5/0/1.5, all mixture
/// components with variance 0.25.
pub fn sample_cause(dist: CauseDistribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, tag::CAUSE);
    let unit = Normal::new(0.0, 1.0).unwrap();
    match dist {
        CauseDistribution::P1 => (0..n).map(|_| unit.sample(&mut rng)).collect(),
        CauseDistribution::P2 => (0..n)
            .map(|_| {
                let center = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                center + 0.5 * unit.sample(&mut rng)
            })
            .collect(),
        CauseDistribution::P3 => (0..n)
            .map(|_| {
                let u = rng.random::<f64>();
                let center = if u < 0.25 {
                    -1.5
                } else if u < 0.75 {
                    0.0
                } else {
                    1.5
                };
                center + 0.5 * unit.sample(&mut rng)
            })
            .collect(),
    }
}

/// Scale of the generalized Gaussian solving
/// `alpha^2 Gamma(3/beta) / Gamma(1/beta) = NOISE_VARIANCE`.
pub fn gg_scale() -> f64 {
    (NOISE_VARIANCE * gamma(1.0 / GG_SHAPE) / gamma(3.0 / GG_SHAPE)).sqrt()
}

/// Draws from the selected noise density; every variant has variance
/// [`NOISE_VARIANCE`].
pub fn sample_noise(dist: NoiseDistribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, tag::NOISE);
    let unit = Normal::new(0.0, 1.0).unwrap();
    match dist {
        NoiseDistribution::GeneralizedGaussian => {
            // |e| = alpha G^(1/beta) with G gamma(1/beta, 1), random sign.
            let alpha = gg_scale();
            let g = Gamma::new(1.0 / GG_SHAPE, 1.0).unwrap();
            (0..n)
                .map(|_| {
                    let magnitude = alpha * g.sample(&mut rng).powf(1.0 / GG_SHAPE);
                    if rng.random::<bool>() {
                        magnitude
                    } else {
                        -magnitude
                    }
                })
                .collect()
        }
        NoiseDistribution::Laplace => {
            let b = (NOISE_VARIANCE / 2.0).sqrt();
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() - 0.5;
                    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
                })
                .collect()
        }
        NoiseDistribution::Gaussian => {
            let sd = NOISE_VARIANCE.sqrt();
            (0..n).map(|_| sd * unit.sample(&mut rng)).collect()
        }
        NoiseDistribution::Bimodal => (0..n)
            .map(|_| {
                let center = if rng.random::<f64>() < 0.5 { BIMODAL_M } else { -BIMODAL_M };
                center + BIMODAL_S * unit.sample(&mut rng)
            })
            .collect(),
    }
}

/// `M1: 0.8x + e`, `M2: x*e`, `M3: 0.3x^3 + e`, `M4: atan(x)^3 + e`.
pub fn apply_mechanism(mech: Mechanism, x: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
    if x.len() != eps.len() {
        return Err(Error::InvalidArgument(format!(
            "cause and noise lengths differ: {} vs {}",
            x.len(),
            eps.len()
        )));
    }
    Ok(match mech {
        Mechanism::M1 => x.iter().zip(eps).map(|(&v, &e)| 0.8 * v + e).collect(),
        Mechanism::M2 => x.iter().zip(eps).map(|(&v, &e)| v * e).collect(),
        Mechanism::M3 => x.iter().zip(eps).map(|(&v, &e)| 0.3 * v * v * v + e).collect(),
        Mechanism::M4 => x.iter().zip(eps).map(|(&v, &e)| v.atan().powi(3) + e).collect(),
    })
}

/// One cause-effect draw with the true direction X -> Y.
pub fn generate(spec: &SyntheticSpec) -> Result<SamplePair> {
    if spec.n < 20 {
        return Err(Error::InsufficientData(format!(
            "synthetic samples need n >= 20, got {}",
            spec.n
        )));
    }
    let x = sample_cause(spec.cause, spec.n, spec.seed);
    let eps = sample_noise(spec.noise, spec.n, spec.seed);
    let y = apply_mechanism(spec.mechanism, &x, &eps)?;
    let mut pair = SamplePair::new(x, y)?;
    pair.labels = Some(("x".into(), "y".into()));
    Ok(pair)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepetitionOutcome {
    pub seed: u64,
    /// None when the repetition was undecidable (excess ties).
    pub decision: Option<Direction>,
    pub confidence: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchResult {
    pub spec: SyntheticSpec,
    pub repetitions: usize,
    /// Fraction correct among decided repetitions.
    pub accuracy: f64,
    pub undecided: usize,
    pub outcomes: Vec<RepetitionOutcome>,
}

/// Run `repetitions` seeded draws of the spec and score the inferred
/// direction against the known X -> Y truth. Repetition `r` uses the data
/// seed `spec.seed ^ r`; undecidable repetitions are excluded from the
/// accuracy denominator and reported.
pub fn run_benchmark(
    spec: &SyntheticSpec,
    repetitions: usize,
    cfg: &InferenceConfig,
) -> Result<BenchResult> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("need at least one repetition".into()));
    }
    let mut outcomes = Vec::with_capacity(repetitions);
    let mut correct = 0usize;
    let mut undecided = 0usize;
    for r in 0..repetitions {
        let rep_seed = spec.seed ^ r as u64;
        let rep_spec = SyntheticSpec { seed: rep_seed, ..*spec };
        let pair = generate(&rep_spec)?;
        let rep_cfg = InferenceConfig { seed: rep_seed, ..cfg.clone() };
        match infer_direction(&pair, &rep_cfg) {
            Ok(decision) => {
                if decision.direction == Direction::XCausesY {
                    correct += 1;
                }
                outcomes.push(RepetitionOutcome {
                    seed: rep_seed,
                    decision: Some(decision.direction),
                    confidence: decision.confidence,
                });
            }
            Err(Error::ExcessiveTies(_)) => {
                undecided += 1;
                outcomes.push(RepetitionOutcome { seed: rep_seed, decision: None, confidence: 0.0 });
            }
            Err(e) => return Err(e),
        }
    }
    let decided = repetitions - undecided;
    let accuracy = if decided == 0 { 0.0 } else { correct as f64 / decided as f64 };
    Ok(BenchResult { spec: *spec, repetitions, accuracy, undecided, outcomes })
}

/// Everything needed to plot one seeded run: pre-image prediction curves,
/// first-PC residuals with histogram and Gaussian fit, and the energy
/// statistics of both directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionDiagnostics {
    /// (regressor grid value, approximate pre-image of the prediction).
    pub preimage_curve: Vec<(f64, f64)>,
    /// Whitened first-PC residual coordinates.
    pub z: Vec<f64>,
    /// (bin center, count) histogram of `z`.
    pub histogram: Vec<(f64, usize)>,
    /// Mean and standard deviation of `z`.
    pub gaussian_fit: (f64, f64),
    pub energy_statistic: f64,
    pub gamma: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub spec: SyntheticSpec,
    pub causal: DirectionDiagnostics,
    pub anticausal: DirectionDiagnostics,
}

fn histogram(z: &[f64], bins: usize) -> Vec<(f64, usize)> {
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for &v in z {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + (i as f64 + 0.5) * width, c))
        .collect()
}

fn diagnose_direction(
    regressor: &[f64],
    target: &[f64],
    cfg: &InferenceConfig,
    grid_points: usize,
) -> Result<DirectionDiagnostics> {
    let sel = grid_search_cv(regressor, target, cfg)?;
    let ka = center_gram(&GramMatrix::squared_exponential(regressor, sel.gamma)?);
    let kb = center_gram(&GramMatrix::squared_exponential(target, sel.gamma)?);
    let model = KernelModel::fit(ka, kb, sel.tau)?;
    let keps = residual_gram(&model)?.center();
    let z = whiten(&keps)?.first_component();
    let energy = energy_statistic(&z)?.value;

    let lo = regressor.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = regressor.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let opts = PreimageOptions::default();
    let mut curve = Vec::with_capacity(grid_points);
    for &g in &crate::asymmetry::linspace(lo, hi, grid_points) {
        let p = preimage(&model, g, regressor, target, &opts)?;
        curve.push((g, p.value));
    }
    let (mean, var) = crate::transform::mean_and_variance(&z);
    Ok(DirectionDiagnostics {
        preimage_curve: curve,
        histogram: histogram(&z, 30),
        gaussian_fit: (mean, var.sqrt()),
        z,
        energy_statistic: energy,
        gamma: sel.gamma,
        tau: sel.tau,
    })
}

/// One seeded end-to-end run emitting the plot ingredients for both
/// directions. The transform side follows the configured method.
pub fn residual_diagnostics(
    spec: &SyntheticSpec,
    cfg: &InferenceConfig,
    grid_points: usize,
) -> Result<DiagnosticRecord> {
    let pair = generate(spec)?;
    let x = standardize(&pair.x)?;
    let y = standardize(&pair.y)?;
    let regressor = if cfg.method.as_str() == "gran-star" {
        x
    } else {
        pit_transform(&x, &y, cfg.ties_threshold)?
    };
    let causal = diagnose_direction(&regressor, &y, cfg, grid_points)?;
    let anticausal = diagnose_direction(&y, &regressor, cfg, grid_points)?;
    Ok(DiagnosticRecord { spec: *spec, causal, anticausal })
}
