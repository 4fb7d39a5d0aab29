//! Explicit feature-map oracle for the kernel path.
//!
//! The degree-2 polynomial kernel `k(a,b) = (1 + ab)^2` has the explicit
//! feature map `phi(a) = (1, sqrt(2) a, a^2)`, so every Gram-side operation
//! can be checked against a three-dimensional computation that never touches
//! the kernel code: the ridge fit is solved in primal form, residuals are
//! actual 3-vectors, and whitening is plain PCA of their covariance.

// Each integration-test target compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use nalgebra::DMatrix;


pub const FEATURE_DIM: usize = 3;

pub fn poly_kernel(a: f64, b: f64) -> f64 {
    let t = 1.0 + a * b;
    t * t
}

pub fn phi(a: f64) -> [f64; FEATURE_DIM] {
    [1.0, std::f64::consts::SQRT_2 * a, a * a]
}

/// Columns are feature vectors of the sample.
pub fn feature_matrix(xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(FEATURE_DIM, xs.len(), |i, j| phi(xs[j])[i])
}

pub fn feature_mean(features: &DMatrix<f64>) -> DMatrix<f64> {
    let n = features.ncols() as f64;
    let mut mean = DMatrix::zeros(FEATURE_DIM, 1);
    for col in features.column_iter() {
        mean += col / n;
    }
    mean
}

/// Subtract a fixed mean column from every feature vector.
pub fn center_with_mean(features: &DMatrix<f64>, mean: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = features.clone();
    for mut col in out.column_iter_mut() {
        col -= mean.column(0);
    }
    out
}

/// Raw polynomial Gram matrix of one sample.
pub fn poly_gram(xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), xs.len(), |i, j| poly_kernel(xs[i], xs[j]))
}

/// Raw polynomial cross-Gram block (rows: new points, columns: training).
pub fn poly_cross_gram(new_xs: &[f64], train_xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(new_xs.len(), train_xs.len(), |i, j| poly_kernel(new_xs[i], train_xs[j]))
}

/// Primal ridge solution `A = (Phi_y Phi_x^T)(tau I + Phi_x Phi_x^T)^{-1}`
/// on already-centered features; a 3x3 solve independent of the Gram path.
pub fn primal_ridge(xf_centered: &DMatrix<f64>, yf_centered: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let gamma = yf_centered * xf_centered.transpose();
    let sigma = DMatrix::identity(FEATURE_DIM, FEATURE_DIM) * tau
        + xf_centered * xf_centered.transpose();
    gamma * sigma.try_inverse().expect("ridge system invertible")
}

/// Residual columns `phi(y_i) - A phi(x_i)` on centered features.
pub fn explicit_residuals(
    xf_centered: &DMatrix<f64>,
    yf_centered: &DMatrix<f64>,
    a_hat: &DMatrix<f64>,
) -> DMatrix<f64> {
    yf_centered - a_hat * xf_centered
}

/// Deterministic pseudo-random sample in [-scale, scale].
pub fn wavy_sample(n: usize, seed: u64, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * (seed as f64 + 3.0);
            (t * 0.7311).sin() * scale
        })
        .collect()
}
