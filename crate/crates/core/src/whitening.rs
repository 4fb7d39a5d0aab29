//! Kernel-PCA whitening of the centered residual Gram matrix.
//!
//! The eigendecomposition of the centered residual Gram yields coordinates
//! `Z = sqrt(N) * B` (columns of `B` the unit eigenvectors), whose columns
//! have zero mean and unit population variance. Only components with
//! eigenvalues above a relative cutoff are kept; the first column is the
//! principal residual direction scored downstream.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::regression::ResidualGram;

/// Relative and absolute eigenvalue cutoffs for component retention.
const RELATIVE_CUTOFF: f64 = 1e-10;
const ABSOLUTE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct WhitenedResiduals {
    /// Full spectrum of the centered residual Gram, nonincreasing.
    eigenvalues: Vec<f64>,
    /// N x r matrix of whitened coordinates over retained components.
    z: DMatrix<f64>,
    retained: usize,
}

impl WhitenedResiduals {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn z_matrix(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    /// First principal component of the whitened residuals.
    pub fn first_component(&self) -> Vec<f64> {
        self.z.column(0).iter().copied().collect()
    }
}

fn skewness(col: &[f64]) -> f64 {
    col.iter().map(|v| v * v * v).sum::<f64>() / col.len() as f64
}

/// Eigendecompose a centered residual Gram and return the whitened
/// coordinates. Fails with `DegenerateResiduals` when every eigenvalue falls
/// below the cutoff (an exact fit); callers must propagate that instead of
/// scoring the direction.
pub fn whiten(k_eps_centered: &ResidualGram) -> Result<WhitenedResiduals> {
    let n = k_eps_centered.order();
    if n < 2 {
        return Err(Error::InsufficientData("whitening needs at least 2 residuals".into()));
    }
    let (vectors, raw_values) = crate::eig::sym_eigen(k_eps_centered.values())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[b].partial_cmp(&raw_values[a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| raw_values[i]).collect();

    let top = eigenvalues[0];
    let cutoff = (RELATIVE_CUTOFF * top).max(ABSOLUTE_CUTOFF);
    let retained = eigenvalues.iter().take_while(|&&l| l > cutoff).count();
    if retained == 0 {
        return Err(Error::DegenerateResiduals(format!(
            "all residual eigenvalues at or below cutoff {cutoff:.3e} (top {top:.3e})"
        )));
    }

    let sqrt_n = (n as f64).sqrt();
    let mut z = DMatrix::zeros(n, retained);
    for (col, &src) in order[..retained].iter().enumerate() {
        let b = vectors.column(src);
        for row in 0..n {
            z[(row, col)] = sqrt_n * b[row];
        }
    }
    // Deterministic orientation of the first component; downstream scores
    // are sign-invariant.
    let first: Vec<f64> = z.column(0).iter().copied().collect();
    if skewness(&first) < 0.0 {
        for row in 0..n {
            z[(row, 0)] = -z[(row, 0)];
        }
    }
    Ok(WhitenedResiduals { eigenvalues, z, retained })
}

/// Share of total residual variance carried by each retained component:
/// `lambda_i / sum_j lambda_j` with the sum over the full nonnegative
/// spectrum, so the profile sums to at most 1.
pub fn variance_profile(w: &WhitenedResiduals) -> Vec<f64> {
    let total: f64 = w.eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    if total <= 0.0 {
        return vec![0.0; w.retained];
    }
    w.eigenvalues[..w.retained].iter().map(|&l| l / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::mean_and_variance;
    use nalgebra::DVector;
    use rand::Rng;

    fn centered_psd(n: usize, rank: usize, seed: u64) -> ResidualGram {
        let mut rng = crate::rng::stream(seed, crate::rng::tag::LAB);
        let mut f = DMatrix::from_fn(n, rank, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        for mut col in f.column_iter_mut() {
            let mean = col.sum() / n as f64;
            col.add_scalar_mut(-mean);
        }
        ResidualGram::from_values(&f * f.transpose()).unwrap()
    }

    #[test]
    fn rank_one_spectrum() {
        let n = 12;
        let mut v = DVector::from_fn(n, |i, _| (i as f64 * 0.83).sin());
        let mean = v.sum() / n as f64;
        v.add_scalar_mut(-mean);
        let k = ResidualGram::from_values(&v * v.transpose() * 3.0).unwrap();
        let w = whiten(&k).unwrap();
        assert_eq!(w.retained(), 1);
        let z = w.first_component();
        let norm2: f64 = z.iter().map(|v| v * v).sum();
        assert!((norm2 / n as f64 - 1.0).abs() < 1e-8);
        assert_eq!(variance_profile(&w).len(), 1);
        assert!((variance_profile(&w)[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn whitened_coordinates_are_orthonormal() {
        let k = centered_psd(40, 7, 3);
        let w = whiten(&k).unwrap();
        let z = w.z_matrix();
        let gram = z.transpose() * z / 40.0;
        let gap = (gram - DMatrix::identity(w.retained(), w.retained())).abs().max();
        assert!(gap < 1e-8, "orthonormality gap {gap}");
    }

    #[test]
    fn columns_have_zero_mean_and_first_pc_unit_variance() {
        let k = centered_psd(35, 5, 11);
        let w = whiten(&k).unwrap();
        for col in 0..w.retained() {
            let c: Vec<f64> = w.z_matrix().column(col).iter().copied().collect();
            let (mean, _) = mean_and_variance(&c);
            assert!(mean.abs() < 1e-6, "column {col} mean {mean}");
        }
        let z = w.first_component();
        let (mean, var) = mean_and_variance(&z);
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn first_component_skewness_is_nonnegative() {
        for seed in 0..6 {
            let k = centered_psd(30, 4, seed);
            let z = whiten(&k).unwrap().first_component();
            assert!(skewness(&z) >= 0.0);
        }
    }

    #[test]
    fn eigenpairs_satisfy_the_eigen_equation() {
        let k = centered_psd(30, 6, 17);
        let w = whiten(&k).unwrap();
        let n = 30.0f64;
        for col in 0..w.retained() {
            // b_i = z_i / sqrt(N) is a unit eigenvector.
            let b = w.z_matrix().column(col) / n.sqrt();
            let lambda = w.eigenvalues()[col];
            let resid = (k.values() * &b - &b * lambda).norm();
            assert!(
                resid < 1e-8 * w.eigenvalues()[0].max(1.0),
                "eigen residual {resid} at component {col}"
            );
        }
    }

    #[test]
    fn variance_profile_matches_direct_normalization() {
        let k = centered_psd(25, 6, 23);
        let w = whiten(&k).unwrap();
        let profile = variance_profile(&w);
        let total: f64 = w.eigenvalues().iter().map(|&l| l.max(0.0)).sum();
        for (i, p) in profile.iter().enumerate() {
            assert!((p - w.eigenvalues()[i] / total).abs() < 1e-12);
        }
        assert!(profile.iter().sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn equal_eigenvalue_profile_splits_evenly() {
        // Build a centered rank-2 Gram with two equal eigenvalues.
        let n = 10;
        let mut a = DVector::zeros(n);
        let mut b = DVector::zeros(n);
        for i in 0..n {
            a[i] = if i < n / 2 { 1.0 } else { -1.0 };
            b[i] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        // Orthogonalize b against a, then scale both to unit norm.
        let proj = a.dot(&b) / a.dot(&a);
        b -= &a * proj;
        let a = a.normalize();
        let b = b.normalize();
        let k = ResidualGram::from_values((&a * a.transpose() + &b * b.transpose()) * 2.5)
            .unwrap();
        let w = whiten(&k).unwrap();
        let profile = variance_profile(&w);
        assert_eq!(profile.len(), 2);
        assert!((profile[0] - 0.5).abs() < 1e-9);
        assert!((profile[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let k = ResidualGram::from_values(DMatrix::zeros(8, 8)).unwrap();
        assert!(matches!(whiten(&k), Err(Error::DegenerateResiduals(_))));
    }
}
