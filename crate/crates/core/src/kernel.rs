//! Squared-exponential kernel evaluation, Gram matrices, and the centering
//! transforms for training and held-out blocks.
//!
//! Centering a Gram matrix is the kernel-space equivalent of subtracting the
//! feature mean: `K - 1K - K1 + 1K1` with `1` the matrix of entries 1/N.
//! Held-out blocks are centered with the training means only.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Evaluate `exp(-gamma * (a - b)^2)`.
pub fn se_kernel(a: f64, b: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kernel bandwidth must be a positive finite real, got {gamma}"
        )));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kernel inputs must be finite, got ({a}, {b})"
        )));
    }
    Ok(se_unchecked(a, b, gamma))
}

/// Kernel evaluation without argument checks; underflow is clamped to zero
/// instead of producing subnormals.
#[inline]
fn se_unchecked(a: f64, b: f64, gamma: f64) -> f64 {
    let d = a - b;
    let v = (-gamma * d * d).exp();
    if v < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

/// Default ceiling on the Gram order; everything downstream of a Gram
/// matrix costs O(N^3).
pub const DEFAULT_MAX_GRAM_ORDER: usize = 2000;

/// Symmetric matrix of pairwise kernel evaluations over one sample.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    values: DMatrix<f64>,
    bandwidth: f64,
}

impl GramMatrix {
    /// Build the Gram matrix of a sample under the squared-exponential
    /// kernel. Unit diagonal and symmetry hold by construction.
    pub fn squared_exponential(xs: &[f64], gamma: f64) -> Result<Self> {
        Self::squared_exponential_with_cap(xs, gamma, DEFAULT_MAX_GRAM_ORDER)
    }

    /// Same, with an explicit ceiling on the sample size.
    pub fn squared_exponential_with_cap(xs: &[f64], gamma: f64, cap: usize) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "Gram matrix needs at least 2 points, got {n}"
            )));
        }
        if n > cap {
            return Err(Error::ResourceLimit(format!(
                "Gram order {n} exceeds the cap of {cap}"
            )));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kernel bandwidth must be a positive finite real, got {gamma}"
            )));
        }
        if let Some(bad) = xs.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample contains non-finite value {bad}"
            )));
        }
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            values[(i, i)] = 1.0;
            for j in 0..i {
                let v = se_unchecked(xs[i], xs[j], gamma);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
        Ok(Self { values, bandwidth: gamma })
    }

    /// Wrap an externally computed square symmetric kernel matrix (used by
    /// tests that drive the pipeline with an explicit feature map).
    pub fn from_parts(values: DMatrix<f64>, bandwidth: f64) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::InvalidArgument(format!(
                "Gram matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let n = values.nrows();
        for i in 0..n {
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "Gram matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("Gram matrix has non-finite entries".into()));
        }
        Ok(Self { values, bandwidth })
    }

    pub fn order(&self) -> usize {
        self.values.nrows()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

/// Rectangular block of kernel evaluations between held-out points (rows)
/// and training points (columns).
#[derive(Debug, Clone)]
pub struct CrossGramMatrix {
    values: DMatrix<f64>,
    bandwidth: f64,
}

impl CrossGramMatrix {
    pub fn squared_exponential(new_xs: &[f64], train_xs: &[f64], gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kernel bandwidth must be a positive finite real, got {gamma}"
            )));
        }
        if new_xs.iter().chain(train_xs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sample contains non-finite values".into()));
        }
        let values = DMatrix::from_fn(new_xs.len(), train_xs.len(), |i, j| {
            se_unchecked(new_xs[i], train_xs[j], gamma)
        });
        Ok(Self { values, bandwidth: gamma })
    }

    pub fn from_parts(values: DMatrix<f64>, bandwidth: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("cross-Gram has non-finite entries".into()));
        }
        Ok(Self { values, bandwidth })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Double centering: `K - 1K - K1 + 1K1`, evaluated through row, column and
/// grand means so the cost stays O(N^2).
pub fn center_gram(k: &GramMatrix) -> GramMatrix {
    let m = k.values();
    let n = m.nrows();
    let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / n as f64).collect();
    let col_means: Vec<f64> = (0..n).map(|j| m.column(j).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let centered = DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand);
    GramMatrix { values: centered, bandwidth: k.bandwidth }
}

/// Center a held-out block against the training Gram:
/// `K_new - M K_train - K_new 1 + M K_train 1`, with `M` the M x N matrix of
/// entries 1/N. All averages come from the training data only.
pub fn center_cross_gram(k_new: &CrossGramMatrix, k_train: &GramMatrix) -> Result<CrossGramMatrix> {
    let kn = k_new.values();
    let kt = k_train.values();
    let n = kt.nrows();
    if kn.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "cross-Gram has {} columns but the training Gram has order {n}",
            kn.ncols()
        )));
    }
    let m = kn.nrows();
    let train_col_means: Vec<f64> = (0..n).map(|j| kt.column(j).sum() / n as f64).collect();
    let new_row_means: Vec<f64> = (0..m).map(|i| kn.row(i).sum() / n as f64).collect();
    let grand = train_col_means.iter().sum::<f64>() / n as f64;
    let centered =
        DMatrix::from_fn(m, n, |i, j| kn[(i, j)] - train_col_means[j] - new_row_means[i] + grand);
    Ok(CrossGramMatrix { values: centered, bandwidth: k_new.bandwidth })
}

/// Diagonal of the centered held-out target Gram. Entry `i` is
/// `k(y_i, y_i) - 2 mean_j k(y_i, y_j^train) + grand_mean(K_train)`; only the
/// cross block and the training Gram are needed, never the M x M block.
pub fn centered_new_diagonal(k_new_train: &CrossGramMatrix, k_train: &GramMatrix) -> Vec<f64> {
    let kn = k_new_train.values();
    let kt = k_train.values();
    let n = kt.nrows();
    let grand = kt.sum() / (n * n) as f64;
    (0..kn.nrows())
        .map(|i| {
            let row_mean = kn.row(i).sum() / n as f64;
            1.0 - 2.0 * row_mean + grand
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_kernel_identical_inputs() {
        assert_eq!(se_kernel(1.3, 1.3, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn se_kernel_unit_distance() {
        let v = se_kernel(0.0, 1.0, 1.0).unwrap();
        assert!((v - 0.367879441).abs() < 1e-8);
    }

    #[test]
    fn se_kernel_symmetry() {
        let a = se_kernel(0.3, -1.7, 0.8).unwrap();
        let b = se_kernel(-1.7, 0.3, 0.8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn se_kernel_rejects_bad_arguments() {
        assert!(se_kernel(0.0, 1.0, 0.0).is_err());
        assert!(se_kernel(0.0, 1.0, -1.0).is_err());
        assert!(se_kernel(f64::NAN, 1.0, 1.0).is_err());
        assert!(se_kernel(0.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn se_kernel_clamps_underflow() {
        let v = se_kernel(0.0, 1e6, 1.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn gram_identical_points_is_all_ones() {
        let g = GramMatrix::squared_exponential(&[0.0, 0.0], 3.0).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn gram_off_diagonal_value() {
        let g = GramMatrix::squared_exponential(&[0.0, 1.0], 1.0).unwrap();
        assert!((g.values()[(0, 1)] - 0.367879441).abs() < 1e-8);
        assert_eq!(g.values()[(0, 0)], 1.0);
        assert_eq!(g.values()[(1, 1)], 1.0);
    }

    #[test]
    fn gram_rejects_single_point() {
        assert!(matches!(
            GramMatrix::squared_exponential(&[0.0], 1.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn gram_order_cap_is_enforced() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64).collect();
        assert!(matches!(
            GramMatrix::squared_exponential_with_cap(&xs, 1.0, 10),
            Err(Error::ResourceLimit(_))
        ));
        assert!(GramMatrix::squared_exponential_with_cap(&xs, 1.0, 12).is_ok());
    }

    #[test]
    fn gram_is_psd() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin() * 2.0).collect();
        let g = GramMatrix::squared_exponential(&xs, 0.5).unwrap();
        let eig = g.values().clone().symmetric_eigenvalues();
        assert!(eig.iter().all(|&l| l >= -1e-10), "min eigenvalue {}", eig.min());
    }

    #[test]
    fn center_all_ones_is_zero() {
        let g = GramMatrix::from_parts(DMatrix::from_element(4, 4, 1.0), 1.0).unwrap();
        let c = center_gram(&g);
        assert!(c.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn center_identity_two_by_two() {
        let g = GramMatrix::from_parts(DMatrix::identity(2, 2), 1.0).unwrap();
        let c = center_gram(&g);
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!((c.values() - expect).abs().max() < 1e-14);
    }

    #[test]
    fn centered_rows_and_columns_sum_to_zero() {
        let xs: Vec<f64> = (0..25).map(|i| (i as f64 * 1.3).cos()).collect();
        let g = GramMatrix::squared_exponential(&xs, 2.0).unwrap();
        let c = center_gram(&g);
        for i in 0..25 {
            assert!(c.values().row(i).sum().abs() < 1e-9 * 25.0);
            assert!(c.values().column(i).sum().abs() < 1e-9 * 25.0);
        }
    }

    #[test]
    fn centering_is_idempotent() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64).sqrt()).collect();
        let g = GramMatrix::squared_exponential(&xs, 1.0).unwrap();
        let once = center_gram(&g);
        let twice = center_gram(&once);
        assert!((once.values() - twice.values()).abs().max() < 1e-9);
    }

    #[test]
    fn cross_center_matches_training_rows() {
        // A held-out block whose rows coincide with training rows must center
        // to the corresponding rows of the centered training Gram.
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let g = GramMatrix::squared_exponential(&xs, 1.5).unwrap();
        let cross = CrossGramMatrix::squared_exponential(&xs[..3], &xs, 1.5).unwrap();
        let cc = center_cross_gram(&cross, &g).unwrap();
        let cg = center_gram(&g);
        for i in 0..3 {
            for j in 0..10 {
                assert!((cc.values()[(i, j)] - cg.values()[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_center_all_ones_is_zero() {
        let g = GramMatrix::from_parts(DMatrix::from_element(5, 5, 1.0), 1.0).unwrap();
        let c = CrossGramMatrix::from_parts(DMatrix::from_element(3, 5, 1.0), 1.0).unwrap();
        let cc = center_cross_gram(&c, &g).unwrap();
        assert!(cc.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn cross_center_dimension_mismatch() {
        let g = GramMatrix::from_parts(DMatrix::identity(4, 4), 1.0).unwrap();
        let c = CrossGramMatrix::from_parts(DMatrix::from_element(3, 5, 0.5), 1.0).unwrap();
        assert!(matches!(center_cross_gram(&c, &g), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn centered_diagonal_matches_direct_formula() {
        let train: Vec<f64> = (0..12).map(|i| (i as f64 * 0.9).sin()).collect();
        let new: Vec<f64> = vec![0.2, -0.4, 1.1];
        let g = GramMatrix::squared_exponential(&train, 0.7).unwrap();
        let cross = CrossGramMatrix::squared_exponential(&new, &train, 0.7).unwrap();
        let diag = centered_new_diagonal(&cross, &g);
        // Direct route: K_nn - M K_train,new - K_new,train M^T + M K_train M^T.
        let n = train.len() as f64;
        for (i, &v) in new.iter().enumerate() {
            let knn = 1.0;
            let row_mean: f64 =
                train.iter().map(|&t| se_kernel(v, t, 0.7).unwrap()).sum::<f64>() / n;
            let grand = g.values().sum() / (n * n);
            let expect = knn - 2.0 * row_mean + grand;
            assert!((diag[i] - expect).abs() < 1e-12);
        }
    }
}
