//! Small dense-matrix and random-variate helpers shared by the samplers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

pub(crate) const CHOL_JITTER: f64 = 1e-8;

/// Cholesky factor, retrying once with `1e-8` added to the diagonal.
pub fn cholesky_jitter(a: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let sym = (a + a.transpose()) * 0.5;
    if let Some(c) = Cholesky::new(sym.clone()) {
        return Ok(c);
    }
    let n = sym.nrows();
    Cholesky::new(sym + DMatrix::identity(n, n) * CHOL_JITTER)
        .ok_or_else(|| Error::Numerical(format!("{what}: matrix not positive definite after jitter")))
}

pub fn standard_normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Draw from `N(P⁻¹ b, P⁻¹)` given the precision `P`.
pub fn draw_from_precision<R: Rng + ?Sized>(
    precision: &DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut R,
    what: &str,
) -> Result<DVector<f64>> {
    let chol = cholesky_jitter(precision, what)?;
    let mean = chol.solve(b);
    let z = standard_normal_vec(b.len(), rng);
    // L Lᵀ = P, so Lᵀ⁻¹ z has covariance P⁻¹
    let lt = chol.l().transpose();
    let dev = lt
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Numerical(format!("{what}: singular factor")))?;
    Ok(mean + dev)
}

/// Draw from `N(mean, cov)`; a zero covariance returns the mean exactly.
pub fn draw_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
    what: &str,
) -> Result<DVector<f64>> {
    let n = mean.len();
    let z = standard_normal_vec(n, rng);
    if cov.iter().all(|v| *v == 0.0) {
        return Ok(mean.clone());
    }
    let l = psd_factor(cov, what)?;
    Ok(mean + l * z)
}

/// A factor `L` with `L Lᵀ = cov` for a positive semidefinite matrix.
pub fn psd_factor(cov: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let sym = (cov + cov.transpose()) * 0.5;
    if let Some(c) = Cholesky::new(sym.clone()) {
        return Ok(c.l());
    }
    // semidefinite: fall back on the eigendecomposition with clipped eigenvalues
    let eig = nalgebra::SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.amax().max(1e-300);
    if eig.eigenvalues.iter().any(|v| *v < -1e-8 * scale) || eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("{what}: covariance is not positive semidefinite")));
    }
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d))
}

/// Inverse-Gamma draw with density ∝ x^{-shape-1} exp(-scale / x).
pub fn inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && scale > 0.0, "IG({shape}, {scale})");
    let g = Gamma::new(shape, 1.0 / scale)
        .expect("gamma parameters are positive")
        .sample(rng);
    1.0 / g
}

/// Symmetric tridiagonal system: `diag` (n) and `off` (n−1) sub-diagonal.
/// Returns the lower bidiagonal Cholesky factor as (diag, sub).
pub fn tridiag_cholesky(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut s = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let mut v = diag[i];
        if i > 0 {
            s[i - 1] = off[i - 1] / d[i - 1];
            v -= s[i - 1] * s[i - 1];
        }
        if !(v > 0.0) {
            return Err(Error::Numerical("tridiagonal precision not positive definite".into()));
        }
        d[i] = v.sqrt();
    }
    Ok((d, s))
}

/// Solve `L x = b` for the bidiagonal factor.
pub fn bidiag_forward(d: &[f64], s: &[f64], b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    for i in 0..b.len() {
        let mut v = b[i];
        if i > 0 {
            v -= s[i - 1] * x[i - 1];
        }
        x[i] = v / d[i];
    }
    x
}

/// Solve `Lᵀ x = b` for the bidiagonal factor.
pub fn bidiag_backward(d: &[f64], s: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = b[i];
        if i + 1 < n {
            v -= s[i] * x[i + 1];
        }
        x[i] = v / d[i];
    }
    x
}
