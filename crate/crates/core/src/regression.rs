//! Ridge regression in feature space, expressed entirely through Gram
//! matrices. The fitted state is the matrix `V = (tau I + K_xx)^-1`; the
//! residual Gram, hold-out error, and approximate pre-images all derive
//! from it without ever materializing feature vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{
    center_cross_gram, centered_new_diagonal, se_kernel, CrossGramMatrix, GramMatrix,
};

/// Errors this close to zero from below are rounding noise and clamp to 0;
/// anything more negative is treated as a numerical failure. Near the
/// interpolation limit the cancellation noise grows with the condition
/// number of the ridge system, so the clamp widens accordingly.
const NEGATIVE_CLAMP: f64 = 1e-8;

fn clamp_nonnegative(value: f64, scale: f64, cond: f64, what: &str) -> Result<f64> {
    let tol = NEGATIVE_CLAMP.max(64.0 * f64::EPSILON * cond * scale.abs());
    if value >= 0.0 {
        Ok(value)
    } else if value >= -tol {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("{what} is negative beyond tolerance: {value}")))
    }
}

/// Fitted kernel ridge regression state.
#[derive(Debug, Clone)]
pub struct KernelModel {
    v: DMatrix<f64>,
    tau: f64,
    gamma: f64,
    k_xx_centered: GramMatrix,
    k_yy_centered: GramMatrix,
    /// Condition estimate of `tau I + K_xx`, used to scale clamp tolerances.
    cond: f64,
}

impl KernelModel {
    /// Fit from centered training Grams. `V` is assembled from a symmetric
    /// eigendecomposition of `K_xx` as `Q diag(1/(tau + lambda_i)) Q^T` and
    /// verified against `(tau I + K_xx) V = I`.
    pub fn fit(k_xx_centered: GramMatrix, k_yy_centered: GramMatrix, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ridge parameter must be a positive finite real, got {tau}"
            )));
        }
        let n = k_xx_centered.order();
        if k_yy_centered.order() != n {
            return Err(Error::InvalidArgument(format!(
                "Gram orders differ: {} vs {}",
                n,
                k_yy_centered.order()
            )));
        }
        let (q, lambda) = crate::eig::sym_eigen(k_xx_centered.values())?;
        let v = v_from_eigen(&q, &lambda, tau)?;
        let residual = {
            let lhs = (DMatrix::identity(n, n) * tau + k_xx_centered.values()) * &v;
            (lhs - DMatrix::identity(n, n)).abs().max()
        };
        // The achievable residual degrades with the condition number of
        // (tau I + K); near the interpolation limit (tau -> 0) the fixed
        // 1e-8 bound is out of reach in f64, so the check widens with an
        // estimate of eps * cond.
        let lambda_max = lambda.iter().fold(0.0f64, |a, &l| a.max(l));
        let lambda_min = lambda.iter().fold(f64::INFINITY, |a, &l| a.min(l));
        let cond = (lambda_max + tau) / (lambda_min.max(0.0) + tau);
        let tol = 1e-8_f64.max(64.0 * f64::EPSILON * cond);
        if residual >= tol {
            return Err(Error::Numerical(format!(
                "ridge solve residual {residual:.3e} exceeds {tol:.3e}"
            )));
        }
        let gamma = k_xx_centered.bandwidth();
        Ok(Self { v, tau, gamma, k_xx_centered, k_yy_centered, cond })
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k_xx_centered(&self) -> &GramMatrix {
        &self.k_xx_centered
    }

    pub fn k_yy_centered(&self) -> &GramMatrix {
        &self.k_yy_centered
    }

    pub fn order(&self) -> usize {
        self.k_xx_centered.order()
    }
}

/// `Q diag(1/(tau + lambda_i)) Q^T`.
fn v_from_eigen(
    q: &DMatrix<f64>,
    eigenvalues: &DVector<f64>,
    tau: f64,
) -> Result<DMatrix<f64>> {
    let mut scaled = q.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        let denom = tau + eigenvalues[k];
        if !(denom > 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive shifted eigenvalue {denom} in ridge solve"
            )));
        }
        col /= denom;
    }
    Ok(&scaled * q.transpose())
}

/// Gram matrix of the fit residuals in feature space.
#[derive(Debug, Clone)]
pub struct ResidualGram {
    values: DMatrix<f64>,
}

impl ResidualGram {
    /// Wrap an externally assembled symmetric residual Gram.
    pub fn from_values(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::InvalidArgument("residual Gram must be square".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("residual Gram has non-finite entries".into()));
        }
        let sym_gap = (&values - values.transpose()).abs().max();
        if sym_gap > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "residual Gram not symmetric (gap {sym_gap:.3e})"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.values.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.values.trace()
    }

    /// Double centering, identical to the Gram centering transform.
    pub fn center(&self) -> ResidualGram {
        let m = &self.values;
        let n = m.nrows();
        let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / n as f64).collect();
        let col_means: Vec<f64> = (0..n).map(|j| m.column(j).sum() / n as f64).collect();
        let grand = row_means.iter().sum::<f64>() / n as f64;
        let values =
            DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand);
        ResidualGram { values }
    }
}

/// `K_eps = K_yy - K_yy V K_xx - K_xx V K_yy + K_xx V K_yy V K_xx`,
/// symmetrized to remove rounding skew.
pub fn residual_gram(model: &KernelModel) -> Result<ResidualGram> {
    let kxx = model.k_xx_centered.values();
    let kyy = model.k_yy_centered.values();
    let v = &model.v;
    let yv = kyy * v;
    let yvx = &yv * kxx;
    let xv = kxx * v;
    let xvyvx = &xv * &yvx;
    let scale = kyy.trace().abs() + 2.0 * yvx.trace().abs() + xvyvx.trace().abs();
    let raw = kyy - &yvx - yvx.transpose() + xvyvx;
    let values = (&raw + raw.transpose()) * 0.5;
    clamp_nonnegative(values.trace(), scale, model.cond, "residual Gram trace")?;
    Ok(ResidualGram { values })
}

/// Centered held-out blocks for the error evaluation: the two cross blocks
/// and the diagonal of the centered new-target Gram.
#[derive(Debug, Clone)]
pub struct HoldoutBlocks {
    pub x_new_x: CrossGramMatrix,
    pub y_new_y: CrossGramMatrix,
    pub y_new_diag: Vec<f64>,
}

/// Build centered hold-out blocks from raw samples. All centering averages
/// come from the training data only.
pub fn holdout_blocks(
    x_train: &[f64],
    y_train: &[f64],
    x_new: &[f64],
    y_new: &[f64],
    gamma: f64,
) -> Result<HoldoutBlocks> {
    if x_new.len() != y_new.len() {
        return Err(Error::InvalidArgument(format!(
            "held-out samples must have equal length, got {} and {}",
            x_new.len(),
            y_new.len()
        )));
    }
    let k_xx = GramMatrix::squared_exponential(x_train, gamma)?;
    let k_yy = GramMatrix::squared_exponential(y_train, gamma)?;
    let cross_x = CrossGramMatrix::squared_exponential(x_new, x_train, gamma)?;
    let cross_y = CrossGramMatrix::squared_exponential(y_new, y_train, gamma)?;
    let y_new_diag = centered_new_diagonal(&cross_y, &k_yy);
    Ok(HoldoutBlocks {
        x_new_x: center_cross_gram(&cross_x, &k_xx)?,
        y_new_y: center_cross_gram(&cross_y, &k_yy)?,
        y_new_diag,
    })
}

/// Sum of squared feature-space errors over held-out instances:
/// `trace(K_nn - K_yn,y V K_xn,x^T - K_xn,x V K_yn,y^T + K_xn,x V K_yy V K_xn,x^T)`.
pub fn holdout_error(model: &KernelModel, blocks: &HoldoutBlocks) -> Result<f64> {
    let n = model.order();
    let m = blocks.x_new_x.nrows();
    if blocks.x_new_x.ncols() != n
        || blocks.y_new_y.ncols() != n
        || blocks.y_new_y.nrows() != m
        || blocks.y_new_diag.len() != m
    {
        return Err(Error::InvalidArgument("hold-out block dimensions do not match the model".into()));
    }
    let v = &model.v;
    let kxn = blocks.x_new_x.values();
    let kyn = blocks.y_new_y.values();
    let xv = kxn * v; // M x N
    let t2 = (kyn * v).component_mul(kxn).sum();
    let t3 = xv.component_mul(kyn).sum();
    let t4 = (&xv * model.k_yy_centered.values()).component_mul(&xv).sum();
    let t1: f64 = blocks.y_new_diag.iter().sum();
    let scale = t1.abs() + t2.abs() + t3.abs() + t4.abs();
    clamp_nonnegative(t1 - t2 - t3 + t4, scale, model.cond, "hold-out error")
}

/// `1 - error / (M * var_ynew)` where `var_ynew` is the mean diagonal of the
/// centered held-out target Gram.
pub fn explained_variance(error: f64, m: usize, var_ynew: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("explained variance needs at least one instance".into()));
    }
    if !(var_ynew > 0.0) {
        return Err(Error::DegenerateTargets(format!(
            "held-out target variance must be positive, got {var_ynew}"
        )));
    }
    if error < 0.0 {
        return Err(Error::InvalidArgument(format!("error must be nonnegative, got {error}")));
    }
    Ok(1.0 - error / (m as f64 * var_ynew))
}

#[derive(Debug, Clone, Copy)]
pub struct PreimageOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub starts: usize,
}

impl Default for PreimageOptions {
    fn default() -> Self {
        Self { max_iters: 500, grad_tol: 1e-8, starts: 5 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PreimageResult {
    pub value: f64,
    pub objective: f64,
    pub converged: bool,
}

/// Approximate pre-image of the predicted feature vector for `x_new`:
/// minimizes `-2 a^T k_{y,u} + k(u,u)` with `a = V k_{x,x_new}` by gradient
/// descent with backtracking, multi-started from the training targets with
/// the largest contribution to the predicted image.
///
/// All kernel quantities live in the centered feature space the model was
/// fitted in. With the centered cross-kernel vector the coefficient sum is
/// zero, and folding the centering of `k_{y,u}` and `k(u,u)` back into the
/// objective reduces it to `-2 sum_i (a_i + 1/N) k(y_i, u) + k(u,u)` up to
/// a constant; the `1/N` restores the mean image.
pub fn preimage(
    model: &KernelModel,
    x_new: f64,
    x_train: &[f64],
    y_train: &[f64],
    opts: &PreimageOptions,
) -> Result<PreimageResult> {
    let n = model.order();
    if x_train.len() != n || y_train.len() != n {
        return Err(Error::InvalidArgument(
            "training samples do not match the model order".into(),
        ));
    }
    let gamma = model.gamma();
    let k_xx = GramMatrix::squared_exponential(x_train, gamma)?;
    let cross = CrossGramMatrix::squared_exponential(&[x_new], x_train, gamma)?;
    let centered = center_cross_gram(&cross, &k_xx)?;
    let k_vec = DVector::from_fn(n, |i, _| centered.values()[(0, i)]);
    let alpha = &model.v * k_vec;
    let beta: Vec<f64> = (0..n).map(|i| alpha[i] + 1.0 / n as f64).collect();

    let objective = |u: f64| -> f64 {
        let s: f64 =
            (0..n).map(|i| beta[i] * se_kernel(y_train[i], u, gamma).unwrap()).sum();
        -2.0 * s + 1.0
    };
    let gradient = |u: f64| -> f64 {
        let s: f64 = (0..n)
            .map(|i| {
                beta[i] * se_kernel(y_train[i], u, gamma).unwrap() * (y_train[i] - u)
            })
            .sum();
        -4.0 * gamma * s
    };

    // Rank candidate starts by their share of a^T k_{y, y_j}.
    let mut scored: Vec<(f64, f64)> = y_train
        .iter()
        .map(|&yj| {
            let s: f64 =
                (0..n).map(|i| beta[i] * se_kernel(y_train[i], yj, gamma).unwrap()).sum();
            (s, yj)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let starts: Vec<f64> = scored.iter().take(opts.starts.max(1)).map(|&(_, y)| y).collect();

    let mut best: Option<PreimageResult> = None;
    for &start in &starts {
        let mut u = start;
        let mut f = objective(u);
        let mut converged = false;
        for _ in 0..opts.max_iters {
            let g = gradient(u);
            if g.abs() < opts.grad_tol {
                converged = true;
                break;
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = u - step * g;
                let fc = objective(cand);
                if fc <= f - 1e-4 * step * g * g {
                    u = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let candidate = PreimageResult { value: u, objective: f, converged };
        let better = match &best {
            None => true,
            Some(b) => f < b.objective,
        };
        if better {
            best = Some(candidate);
        }
    }
    let mut result = best.expect("at least one start");
    // The returned point must be at least as good as every start.
    let start_best =
        starts.iter().map(|&s| objective(s)).fold(f64::INFINITY, f64::min);
    if result.objective > start_best {
        result.converged = false;
    }
    Ok(result)
}
