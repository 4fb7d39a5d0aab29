//! Symmetric eigendecomposition backend for the O(N^3) hot paths.
//!
//! The cross-validation sweep, the model fit, and the residual whitening
//! each eigendecompose dense symmetric matrices hundreds of times per
//! inference call; faer's self-adjoint solver is used there, sequentially
//! for run-to-run determinism. Results come back as nalgebra types.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvectors (columns) and eigenvalues of a symmetric matrix, unsorted.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = m.nrows();
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let eigenvalues = DVector::from_fn(n, |i, _| s[i]);
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((eigenvectors, eigenvalues))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_the_nalgebra_solver() {
        let n = 60;
        let f = DMatrix::from_fn(n, n, |i, j| ((i * 13 + j * 7) as f64 * 0.37).sin());
        let sym = (&f + f.transpose()) * 0.5;
        let (q, lambda) = sym_eigen(&sym).unwrap();
        // Eigen equation and orthonormality.
        let resid = (&sym * &q - &q * DMatrix::from_diagonal(&lambda)).abs().max();
        assert!(resid < 1e-10, "eigen residual {resid}");
        let ortho = (q.transpose() * &q - DMatrix::identity(n, n)).abs().max();
        assert!(ortho < 1e-10, "orthonormality gap {ortho}");
        // Same spectrum as the nalgebra solver.
        let mut ours: Vec<f64> = lambda.iter().copied().collect();
        let mut reference: Vec<f64> =
            sym.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
