//! Numerical verification lab for the cumulant asymmetry between causal and
//! anti-causal linear fits.
//!
//! For a linear model with matched marginals the residual cumulants of the
//! reversed fit are the forward ones multiplied by
//! `M_n = (I - A^T A)^{(n)} (I - A^{(n)})^{-1} + (-1)^n (A^T)^{(n)}`,
//! with `X^{(n)}` the n-fold Kronecker power. This module assembles those
//! matrices, evaluates the scalar factor `c_n(w)`, and checks the
//! determinant identity, the truncated expansion of the energy distance,
//! and the shrinkage of cumulants projected on the first principal
//! component.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};

/// Hard ceiling on the Kronecker-power dimension `d^n`.
pub const DEFAULT_KRON_CAP: usize = 4096;

/// Scalar cumulant shrinkage factor `(1 - w^2)^n / (1 - w^n) + (-w)^n`.
pub fn c_n(w: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("cumulant order must be at least 1".into()));
    }
    if !(w.abs() < 1.0) {
        return Err(Error::Domain(format!("c_n requires |w| < 1, got {w}")));
    }
    let ni = n as i32;
    Ok((1.0 - w * w).powi(ni) / (1.0 - w.powi(ni)) + (-w).powi(ni))
}

/// Model coefficient matrix with all singular values strictly below one.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    a: DMatrix<f64>,
    symmetric: bool,
    singular_values: Vec<f64>,
}

impl MixingMatrix {
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument("mixing matrix must be square".into()));
        }
        let mut singular_values: Vec<f64> = a.singular_values().iter().copied().collect();
        singular_values.sort_by(|x, y| y.partial_cmp(x).unwrap());
        if singular_values.first().is_some_and(|&s| s >= 1.0) {
            return Err(Error::Domain(format!(
                "all singular values must be strictly below 1, largest is {}",
                singular_values[0]
            )));
        }
        let symmetric = (&a - a.transpose()).abs().max() < 1e-12;
        Ok(Self { a, symmetric, singular_values })
    }

    /// `U diag(sigma) V^T` with independently drawn random orthogonal
    /// factors.
    pub fn random_nonsymmetric(
        d: usize,
        sv_range: (f64, f64),
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let dist = Uniform::new(sv_range.0, sv_range.1)
            .map_err(|e| Error::InvalidArgument(format!("bad singular value range: {e}")))?;
        let sigma: Vec<f64> = (0..d).map(|_| dist.sample(rng)).collect();
        let u = random_orthogonal(d, rng);
        let v = random_orthogonal(d, rng);
        Self::from_matrix(&u * DMatrix::from_diagonal(&DVector::from_vec(sigma)) * v.transpose())
    }

    /// `Q diag(lambda) Q^T` with a random orthogonal eigenbasis.
    pub fn random_symmetric(
        d: usize,
        eig_range: (f64, f64),
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let dist = Uniform::new(eig_range.0, eig_range.1)
            .map_err(|e| Error::InvalidArgument(format!("bad eigenvalue range: {e}")))?;
        let eigs: Vec<f64> = (0..d).map(|_| dist.sample(rng)).collect();
        let q = random_orthogonal(d, rng);
        Self::from_matrix(&q * DMatrix::from_diagonal(&DVector::from_vec(eigs)) * q.transpose())
    }

    /// Symmetric matrix with prescribed eigenvalues in a fixed rotation
    /// basis, used by the contour sweeps.
    pub fn symmetric_with_eigenvalues(eigenvalues: &[f64], angle: f64) -> Result<Self> {
        let d = eigenvalues.len();
        let mut q = DMatrix::identity(d, d);
        if d >= 2 {
            q[(0, 0)] = angle.cos();
            q[(0, 1)] = -angle.sin();
            q[(1, 0)] = angle.sin();
            q[(1, 1)] = angle.cos();
        }
        let diag = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.to_vec()));
        Self::from_matrix(&q * diag * q.transpose())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Cached singular values, nonincreasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }
}

fn random_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let g = DMatrix::from_fn(d, d, |_, _| normal.sample(rng));
    g.qr().q()
}

fn kron_power(m: &DMatrix<f64>, n: u32) -> DMatrix<f64> {
    let mut acc = m.clone();
    for _ in 1..n {
        acc = acc.kronecker(m);
    }
    acc
}

fn kron_vector_power(v: &DVector<f64>, n: u32) -> DVector<f64> {
    let mut acc = v.clone();
    for _ in 1..n {
        acc = acc.kronecker(v);
    }
    acc
}

/// The assembled relation between causal and anti-causal cumulants of one
/// order.
#[derive(Debug, Clone)]
pub struct CumulantRelation {
    pub n: u32,
    pub matrix: DMatrix<f64>,
    /// Largest singular value of the matrix.
    pub op_norm: f64,
}

/// Assemble `M_n` from n-fold Kronecker powers and compute its operator
/// norm.
pub fn build_mn(a: &MixingMatrix, n: u32) -> Result<CumulantRelation> {
    build_mn_with_cap(a, n, DEFAULT_KRON_CAP)
}

pub fn build_mn_with_cap(a: &MixingMatrix, n: u32, cap: usize) -> Result<CumulantRelation> {
    if n == 0 {
        return Err(Error::InvalidArgument("cumulant order must be at least 1".into()));
    }
    let d = a.dim();
    let dn = (d as f64).powi(n as i32);
    if dn > cap as f64 {
        return Err(Error::ResourceLimit(format!(
            "Kronecker power dimension {d}^{n} exceeds the cap of {cap}"
        )));
    }
    let dn = dn as usize;
    let am = a.matrix();
    let c = DMatrix::identity(d, d) - am.transpose() * am;
    let kron_c = kron_power(&c, n);
    let kron_a = kron_power(am, n);
    let kron_at = kron_power(&am.transpose(), n);
    let inv = (DMatrix::identity(dn, dn) - kron_a)
        .try_inverse()
        .ok_or_else(|| Error::Domain("I - A^(n) is singular".into()))?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let matrix = kron_c * inv + kron_at * sign;
    let op_norm = matrix.singular_values().iter().fold(0.0f64, |acc, &s| acc.max(s));
    Ok(CumulantRelation { n, matrix, op_norm })
}

/// Closed form of `||M_n||` for symmetric `A` with the given eigenvalues:
/// the maximum over index tuples of
/// `|prod_j (1 - l_vj^2) / (1 - prod_i l_vi) + (-1)^n prod_j l_vj|`.
pub fn symmetric_op_norm(eigenvalues: &[f64], n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("cumulant order must be at least 1".into()));
    }
    if eigenvalues.is_empty() {
        return Err(Error::InvalidArgument("need at least one eigenvalue".into()));
    }
    if eigenvalues.iter().any(|l| !(l.abs() < 1.0)) {
        return Err(Error::Domain("all eigenvalues must satisfy |lambda| < 1".into()));
    }
    let d = eigenvalues.len();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut tuple = vec![0usize; n as usize];
    let mut max_abs = 0.0f64;
    loop {
        let mut prod = 1.0;
        let mut num = 1.0;
        for &idx in &tuple {
            let l = eigenvalues[idx];
            prod *= l;
            num *= 1.0 - l * l;
        }
        if (1.0 - prod).abs() < 1e-300 {
            return Err(Error::Domain("eigenvalue product equals 1".into()));
        }
        let value = num / (1.0 - prod) + sign * prod;
        max_abs = max_abs.max(value.abs());
        // Advance the mixed-radix tuple counter.
        let mut pos = 0;
        loop {
            if pos == tuple.len() {
                return Ok(max_abs);
            }
            tuple[pos] += 1;
            if tuple[pos] < d {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// Determinants of the two residual covariance forms,
/// `det(I - A A^T)` and `det(I - A^T A)`. They agree analytically.
pub fn determinant_identity_check(a: &MixingMatrix) -> (f64, f64) {
    let d = a.dim();
    let am = a.matrix();
    let c = DMatrix::identity(d, d) - am * am.transpose();
    let ct = DMatrix::identity(d, d) - am.transpose() * am;
    (c.determinant(), ct.determinant())
}

/// `||vect(I - A^T A)|| / ||vect(I - A A^T)||`, the exact second-cumulant
/// norm ratio between the two directions. Equals one for any valid matrix.
pub fn second_cumulant_ratio(a: &MixingMatrix) -> f64 {
    let d = a.dim();
    let am = a.matrix();
    let c = DMatrix::identity(d, d) - am * am.transpose();
    let ct = DMatrix::identity(d, d) - am.transpose() * am;
    ct.norm() / c.norm()
}

fn hermite_moment_constants() -> (f64, f64) {
    // E[H2(x)^2 phi(x)] and E[H3(x)^2 phi(x)] under a standard normal,
    // computed once by quadrature.
    static CONSTANTS: OnceLock<(f64, f64)> = OnceLock::new();
    *CONSTANTS.get_or_init(|| {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let integrate = |f: &dyn Fn(f64) -> f64| {
            let (lo, hi, steps) = (-14.0, 14.0, 56_000);
            let h = (hi - lo) / steps as f64;
            let mut acc = f(lo) + f(hi);
            for i in 1..steps {
                let x = lo + i as f64 * h;
                acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
            }
            acc * h / 3.0
        };
        let h2 = integrate(&|x| {
            let p = x * x - 1.0;
            p * p * phi(x) * phi(x)
        });
        let h3 = integrate(&|x| {
            let p = x * x * x - 3.0 * x;
            p * p * phi(x) * phi(x)
        });
        (h2, h3)
    })
}

/// Two-term truncated expansion of the squared energy distance between a
/// near-Gaussian distribution with cumulants `(kappa3, kappa4)` and the
/// standard normal:
/// `kappa3^2/36 E[H2^2 phi] + kappa4^2/576 E[H3^2 phi]`.
pub fn gram_charlier_energy(kappa3: f64, kappa4: f64) -> f64 {
    let (h2, h3) = hermite_moment_constants();
    kappa3 * kappa3 / 36.0 * h2 + kappa4 * kappa4 / 576.0 * h3
}

/// Eigenvalue of `M_n` along the Kronecker power of the first principal
/// component of the causal residual covariance `C = I - A A^T`.
/// Returns `None` when the top eigenvalue of `C` is degenerate and the
/// projected direction fails the eigenvector check.
pub fn projected_shrinkage_check(a: &MixingMatrix, n: u32) -> Result<Option<f64>> {
    if !a.is_symmetric() {
        return Err(Error::InvalidArgument(
            "projected shrinkage check requires a symmetric matrix".into(),
        ));
    }
    let d = a.dim();
    let am = a.matrix();
    let c = DMatrix::identity(d, d) - am * am.transpose();
    let eigen = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[j].partial_cmp(&eigen.eigenvalues[i]).unwrap());
    let top = eigen.eigenvalues[order[0]];
    let second = if d > 1 { eigen.eigenvalues[order[1]] } else { f64::NEG_INFINITY };
    let degenerate = d > 1 && (top - second).abs() <= 1e-9 * top.abs().max(1.0);

    let p1: DVector<f64> = eigen.eigenvectors.column(order[0]).into_owned();
    let p1n = kron_vector_power(&p1, n);
    let relation = build_mn(a, n)?;
    let image = &relation.matrix * &p1n;
    let value = p1n.dot(&image);
    let residual = (&image - &p1n * value).norm();
    if residual >= 1e-8 {
        if degenerate {
            return Ok(None);
        }
        return Err(Error::Numerical(format!(
            "projected direction is not an eigenvector (residual {residual:.3e})"
        )));
    }
    Ok(Some(value))
}

/// Evenly spaced grid with both endpoints included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct CnRow {
    pub n: u32,
    pub w: f64,
    pub value: f64,
}

/// `c_n(w)` over an inclusive grid for each requested order.
pub fn cn_grid(orders: &[u32], lo: f64, hi: f64, count: usize) -> Result<Vec<CnRow>> {
    let mut rows = Vec::with_capacity(orders.len() * count);
    for &n in orders {
        for &w in &linspace(lo, hi, count) {
            rows.push(CnRow { n, w, value: c_n(w, n)? });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct SymmetricNormRow {
    pub n: u32,
    pub lambda1: f64,
    pub lambda2: f64,
    pub op_norm: f64,
}

/// `||M_n||` over an eigenvalue grid for symmetric 2x2 matrices.
pub fn symmetric_norm_grid(
    orders: &[u32],
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<Vec<SymmetricNormRow>> {
    let grid = linspace(lo, hi, count);
    let mut rows = Vec::with_capacity(orders.len() * count * count);
    for &n in orders {
        for &l1 in &grid {
            for &l2 in &grid {
                rows.push(SymmetricNormRow {
                    n,
                    lambda1: l1,
                    lambda2: l2,
                    op_norm: symmetric_op_norm(&[l1, l2], n)?,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct NonsymmetricNormRow {
    pub n: u32,
    pub sigma1: f64,
    pub sigma2: f64,
    pub op_norm: f64,
    /// Second-cumulant norm ratio for the same matrix.
    pub ratio2: f64,
}

/// `||M_n||` over a singular-value grid for 2x2 matrices with random
/// orthogonal singular vectors.
pub fn nonsymmetric_norm_grid(
    orders: &[u32],
    lo: f64,
    hi: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<NonsymmetricNormRow>> {
    let grid = linspace(lo, hi, count);
    let mut rng = crate::rng::stream(seed, crate::rng::tag::LAB);
    let mut rows = Vec::with_capacity(orders.len() * count * count);
    for &n in orders {
        for &s1 in &grid {
            for &s2 in &grid {
                let u = random_orthogonal(2, &mut rng);
                let v = random_orthogonal(2, &mut rng);
                let a = MixingMatrix::from_matrix(
                    &u * DMatrix::from_diagonal(&DVector::from_vec(vec![s1, s2]))
                        * v.transpose(),
                )?;
                rows.push(NonsymmetricNormRow {
                    n,
                    sigma1: s1,
                    sigma2: s2,
                    op_norm: build_mn(&a, n)?.op_norm,
                    ratio2: second_cumulant_ratio(&a),
                });
            }
        }
    }
    Ok(rows)
}
