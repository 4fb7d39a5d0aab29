//! End-to-end causal direction inference.
//!
//! Both variables are standardized, one side is mapped onto the other's
//! empirical distribution, kernel ridge regressions are fitted in both
//! directions with cross-validated hyper-parameters, the residuals are
//! whitened in feature space, and the first principal components are scored
//! for non-Gaussianity. The direction whose residuals are less Gaussian is
//! reported, with the score gap as confidence.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussianity::{energy_statistic, knn_entropy, kurtosis_score, DEFAULT_KNN_K};
use crate::kernel::{center_gram, GramMatrix};
use crate::regression::{residual_gram, KernelModel};
use crate::rng;
use crate::transform::{pit_transform, standardize, SamplePair, DEFAULT_TIES_THRESHOLD};
use crate::whitening::whiten;

/// Score variant driving the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InferenceMethod {
    /// Energy-distance score on distribution-matched inputs.
    Gran,
    /// Energy-distance score without the distribution-matching transform.
    GranStar,
    /// Absolute excess kurtosis.
    Grk4,
    /// Negated k-nearest-neighbor entropy.
    Grent,
}

impl InferenceMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            InferenceMethod::Gran => "gran",
            InferenceMethod::GranStar => "gran-star",
            InferenceMethod::Grk4 => "grk4",
            InferenceMethod::Grent => "grent",
        }
    }

    fn uses_transform(&self) -> bool {
        !matches!(self, InferenceMethod::GranStar)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub method: InferenceMethod,
    /// Grid points per hyper-parameter.
    pub grid_size: usize,
    pub folds: usize,
    pub seed: u64,
    /// Explicit bandwidth grid; replaces the median-heuristic grid.
    pub gamma_grid: Option<Vec<f64>>,
    /// Explicit ridge grid; replaces the log-spaced default.
    pub tau_grid: Option<Vec<f64>>,
    pub ties_threshold: f64,
    /// Minimum sample size accepted for inference.
    pub min_n: usize,
    pub knn_k: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            method: InferenceMethod::Gran,
            grid_size: 10,
            folds: 10,
            seed: 0,
            gamma_grid: None,
            tau_grid: None,
            ties_threshold: DEFAULT_TIES_THRESHOLD,
            min_n: 20,
            knn_k: DEFAULT_KNN_K,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(Error::InvalidArgument("grid size must be at least 2".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidArgument("fold count must be at least 2".into()));
        }
        for grid in [&self.gamma_grid, &self.tau_grid].into_iter().flatten() {
            if grid.is_empty() || grid.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
                return Err(Error::InvalidArgument(
                    "explicit grids must be nonempty and strictly positive".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    XCausesY,
    YCausesX,
}

impl Direction {
    pub fn flipped(&self) -> Direction {
        match self {
            Direction::XCausesY => Direction::YCausesX,
            Direction::YCausesX => Direction::XCausesY,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::XCausesY => "x->y",
            Direction::YCausesX => "y->x",
        }
    }
}

/// Hyper-parameters selected by cross-validation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSelection {
    pub gamma: f64,
    pub tau: f64,
    /// Mean cross-validated explained variance at the selected cell.
    pub cv_score: f64,
}

/// One fitted direction: selected hyper-parameters and the non-Gaussianity
/// statistic of the whitened first residual component, oriented so larger
/// always means less Gaussian.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitReport {
    pub gamma: f64,
    pub tau: f64,
    pub cv_score: f64,
    pub statistic: f64,
}

/// Both fits behind one gap value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub gap: f64,
    pub forward: FitReport,
    pub reverse: FitReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionDecision {
    pub direction: Direction,
    pub confidence: f64,
    pub g_xtilde: f64,
    pub g_ytilde: f64,
    /// Fits behind `g_xtilde` (transformed x against y) and `g_ytilde`
    /// (transformed y against x, computed on the swapped pair).
    pub branch_xtilde: GapReport,
    pub branch_ytilde: GapReport,
    pub method: InferenceMethod,
    pub n: usize,
}

/// Median of pairwise squared distances, the scale anchor of the default
/// bandwidth grid.
fn median_pairwise_sq_dist(v: &[f64]) -> f64 {
    let n = v.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            let d = v[i] - v[j];
            dists.push(d * d);
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists.len();
    let med = if m % 2 == 1 { dists[m / 2] } else { 0.5 * (dists[m / 2 - 1] + dists[m / 2]) };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            (llo + t * (lhi - llo)).exp()
        })
        .collect()
}

/// Bandwidth grid: log-spaced multipliers 2^-4 .. 2^5 of the inverse median
/// pairwise squared distance of the regressor sample.
fn default_gamma_grid(regressor: &[f64], count: usize) -> Vec<f64> {
    let base = 1.0 / median_pairwise_sq_dist(regressor);
    log_spaced(2f64.powi(-4), 2f64.powi(5), count).into_iter().map(|m| m * base).collect()
}

/// Ridge grid: log-spaced in [1e-3, 10].
fn default_tau_grid(count: usize) -> Vec<f64> {
    log_spaced(1e-3, 10.0, count)
}

fn sorted_grid(mut grid: Vec<f64>) -> Vec<f64> {
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid
}

/// Deterministic fold assignment: a seeded permutation cut into contiguous
/// blocks. Depends only on the seed and the sample size, so every fit inside
/// one inference call shares the same folds.
fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed, rng::tag::FOLDS);
    perm.shuffle(&mut rng);
    (0..folds)
        .map(|f| {
            let lo = f * n / folds;
            let hi = (f + 1) * n / folds;
            perm[lo..hi].to_vec()
        })
        .collect()
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Double centering on a raw square kernel block.
fn center_square(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / n as f64).collect();
    let col_means: Vec<f64> = (0..n).map(|j| m.column(j).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Center a validation-against-training block with training means only.
fn center_cross(new_block: &DMatrix<f64>, train: &DMatrix<f64>) -> DMatrix<f64> {
    let n = train.nrows();
    let m = new_block.nrows();
    let train_col_means: Vec<f64> = (0..n).map(|j| train.column(j).sum() / n as f64).collect();
    let new_row_means: Vec<f64> = (0..m).map(|i| new_block.row(i).sum() / n as f64).collect();
    let grand = train_col_means.iter().sum::<f64>() / n as f64;
    DMatrix::from_fn(m, n, |i, j| {
        new_block[(i, j)] - train_col_means[j] - new_row_means[i] + grand
    })
}

/// Grid search over (gamma, tau) maximizing the mean cross-validated
/// explained variance. One symmetric eigendecomposition per (gamma, fold)
/// is reused across the whole tau grid; ties resolve to the smallest tau,
/// then the smallest gamma.
pub fn grid_search_cv(a: &[f64], b: &[f64], cfg: &InferenceConfig) -> Result<GridSelection> {
    cfg.validate()?;
    let n = a.len();
    if b.len() != n {
        return Err(Error::InvalidArgument("samples must have equal length".into()));
    }
    if n < cfg.folds {
        return Err(Error::InsufficientData(format!(
            "need at least as many points ({n}) as folds ({})",
            cfg.folds
        )));
    }
    let gammas = sorted_grid(
        cfg.gamma_grid.clone().unwrap_or_else(|| default_gamma_grid(a, cfg.grid_size)),
    );
    let taus = sorted_grid(cfg.tau_grid.clone().unwrap_or_else(|| default_tau_grid(cfg.grid_size)));
    let folds = fold_assignment(n, cfg.folds, cfg.seed);

    // scores[gi][ti] = (sum of explained variance, folds counted)
    let mut scores = vec![vec![(0.0f64, 0usize); taus.len()]; gammas.len()];

    for (gi, &gamma) in gammas.iter().enumerate() {
        let kx = GramMatrix::squared_exponential(a, gamma)?.into_values();
        let ky = GramMatrix::squared_exponential(b, gamma)?.into_values();
        for val_idx in &folds {
            if val_idx.is_empty() {
                continue;
            }
            let train_idx: Vec<usize> =
                (0..n).filter(|i| !val_idx.contains(i)).collect();
            let nt = train_idx.len();
            if nt < 2 {
                continue;
            }
            let kx_tt = submatrix(&kx, &train_idx, &train_idx);
            let ky_tt = submatrix(&ky, &train_idx, &train_idx);
            let kx_vt = submatrix(&kx, val_idx, &train_idx);
            let ky_vt = submatrix(&ky, val_idx, &train_idx);

            let kx_tt_c = center_square(&kx_tt);
            let ky_tt_c = center_square(&ky_tt);
            let kx_vt_c = center_cross(&kx_vt, &kx_tt);
            let ky_vt_c = center_cross(&ky_vt, &ky_tt);

            // Centered diagonal of the validation target Gram.
            let ky_tt_grand = ky_tt.sum() / (nt * nt) as f64;
            let diag: Vec<f64> = (0..val_idx.len())
                .map(|i| 1.0 - 2.0 * ky_vt.row(i).sum() / nt as f64 + ky_tt_grand)
                .collect();
            let diag_sum: f64 = diag.iter().sum();
            let var_ynew = diag_sum / val_idx.len() as f64;
            if !(var_ynew > 0.0) {
                continue; // degenerate targets in this fold
            }

            let (q, lambda) = crate::eig::sym_eigen(&kx_tt_c)?;
            let p = &kx_vt_c * &q;
            let w = &ky_vt_c * &q;
            let coupling: Vec<f64> =
                (0..nt).map(|k| w.column(k).dot(&p.column(k))).collect();

            for (ti, &tau) in taus.iter().enumerate() {
                if lambda.iter().any(|&l| tau + l <= 0.0) {
                    continue;
                }
                let weights: Vec<f64> = lambda.iter().map(|&l| 1.0 / (tau + l)).collect();
                let t2: f64 =
                    weights.iter().zip(&coupling).map(|(&wk, &ck)| wk * ck).sum();
                // X = V K_xv^T = Q diag(w) P^T, thin in the validation size.
                let mut p_scaled = p.clone();
                for (k, mut col) in p_scaled.column_iter_mut().enumerate() {
                    col *= weights[k];
                }
                let x = &q * p_scaled.transpose();
                let t4 = (&ky_tt_c * &x).component_mul(&x).sum();
                let err = diag_sum - 2.0 * t2 + t4;
                let err = if err < 0.0 { 0.0 } else { err };
                let ev = 1.0 - err / diag_sum;
                scores[gi][ti].0 += ev;
                scores[gi][ti].1 += 1;
            }
        }
    }

    let mut best: Option<GridSelection> = None;
    for (gi, &gamma) in gammas.iter().enumerate() {
        for (ti, &tau) in taus.iter().enumerate() {
            let (sum, count) = scores[gi][ti];
            if count < cfg.folds {
                continue; // cell degenerate in at least one fold
            }
            let score = sum / count as f64;
            let replace = match &best {
                None => true,
                Some(b) => {
                    score > b.cv_score
                        || (score == b.cv_score
                            && (tau < b.tau || (tau == b.tau && gamma < b.gamma)))
                }
            };
            if replace {
                best = Some(GridSelection { gamma, tau, cv_score: score });
            }
        }
    }
    best.ok_or_else(|| Error::Numerical("every grid cell was degenerate".into()))
}

/// Fit one direction at fixed hyper-parameters and score the whitened first
/// residual component with the configured variant statistic.
fn fit_and_score(
    regressor: &[f64],
    target: &[f64],
    selection: GridSelection,
    cfg: &InferenceConfig,
) -> Result<FitReport> {
    let ka = center_gram(&GramMatrix::squared_exponential(regressor, selection.gamma)?);
    let kb = center_gram(&GramMatrix::squared_exponential(target, selection.gamma)?);
    let model = KernelModel::fit(ka, kb, selection.tau)?;
    let keps = residual_gram(&model)?.center();
    let whitened = whiten(&keps)?;
    let z = whitened.first_component();
    let statistic = match cfg.method {
        InferenceMethod::Gran | InferenceMethod::GranStar => energy_statistic(&z)?.value,
        InferenceMethod::Grk4 => kurtosis_score(&z)?.value,
        // Negated so larger means less Gaussian, like the other variants.
        InferenceMethod::Grent => -knn_entropy(&z, cfg.knn_k)?.value,
    };
    Ok(FitReport {
        gamma: selection.gamma,
        tau: selection.tau,
        cv_score: selection.cv_score,
        statistic,
    })
}

/// Fit `a -> b` and `b -> a`, each with its own hyper-parameter search, and
/// return `score(z_ab)/N - score(z_ba)/N`. Positive values mean the
/// residuals of `a -> b` are less Gaussian.
pub fn gaussianization_gap(a: &[f64], b: &[f64], cfg: &InferenceConfig) -> Result<GapReport> {
    let n = a.len() as f64;
    let sel_ab = grid_search_cv(a, b, cfg)?;
    let forward = fit_and_score(a, b, sel_ab, cfg)?;
    let sel_ba = grid_search_cv(b, a, cfg)?;
    let reverse = fit_and_score(b, a, sel_ba, cfg)?;
    Ok(GapReport { gap: forward.statistic / n - reverse.statistic / n, forward, reverse })
}

/// Full decision procedure: standardize, transform, compute both branch
/// gaps, and pick the direction with the stronger Gaussianization signal.
pub fn infer_direction(pair: &SamplePair, cfg: &InferenceConfig) -> Result<DirectionDecision> {
    cfg.validate()?;
    let n = pair.len();
    if n < cfg.min_n {
        return Err(Error::InsufficientData(format!(
            "inference needs at least {} points, got {n}",
            cfg.min_n
        )));
    }
    let x = standardize(&pair.x)?;
    let y = standardize(&pair.y)?;

    let (branch_x, branch_y) = if cfg.method.uses_transform() {
        let xt = pit_transform(&x, &y, cfg.ties_threshold)?;
        let gx = gaussianization_gap(&xt, &y, cfg)?;
        let yt = pit_transform(&y, &x, cfg.ties_threshold)?;
        let gy = gaussianization_gap(&yt, &x, cfg)?;
        (gx, gy)
    } else {
        let gx = gaussianization_gap(&x, &y, cfg)?;
        let gy = gaussianization_gap(&y, &x, cfg)?;
        (gx, gy)
    };

    let g_x = branch_x.gap;
    let g_y = branch_y.gap;
    let direction = if g_x.abs() >= g_y.abs() {
        if g_x > 0.0 {
            Direction::XCausesY
        } else {
            Direction::YCausesX
        }
    } else if g_y > 0.0 {
        Direction::YCausesX
    } else {
        Direction::XCausesY
    };
    Ok(DirectionDecision {
        direction,
        confidence: g_x.abs().max(g_y.abs()),
        g_xtilde: g_x,
        g_ytilde: g_y,
        branch_xtilde: branch_x,
        branch_ytilde: branch_y,
        method: cfg.method,
        n,
    })
}
