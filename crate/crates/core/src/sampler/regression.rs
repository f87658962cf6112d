use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::chain::SweepLayout;
use super::state::{EquationState, HorseshoeState};
use crate::error::{Error, Result};
use crate::linalg::draw_from_precision;

/// Prior variances below this are clamped; smaller values only add rounding noise.
const PRIOR_VAR_FLOOR: f64 = 1e-20;
/// Floor on observation variances exp(h).
pub(crate) const OBS_VAR_FLOOR: f64 = 1e-12;

/// Regression data of one equation over the estimation rows.
#[derive(Debug, Clone)]
pub struct ComposedEquation {
    pub y: DVector<f64>,
    /// Rows are `z_it' = (x_t', -ε_1t, ..., -ε_{i-1,t}, 1)`.
    pub z: DMatrix<f64>,
    /// Rows are `(z_it', (β̃_it ⊙ z_it)')`.
    pub aug_z: DMatrix<f64>,
}

/// Stacked lags `x_t = (y_{t-1}', ..., y_{t-P}')'` for grid rows `rows`.
pub fn lag_matrix(filled: &DMatrix<f64>, lags: usize, rows: std::ops::Range<usize>) -> DMatrix<f64> {
    let m = filled.ncols();
    assert!(rows.start >= lags, "lag matrix needs {lags} pre-sample rows");
    let n = rows.len();
    DMatrix::from_fn(n, lags * m, |r, c| {
        let (l, j) = (c / m, c % m);
        filled[(rows.start + r - l - 1, j)]
    })
}

/// Reduced-form residual `ε_jt = y_jt - a_jt' x_t - c_jt` of an equation.
pub fn reduced_form_residual(y: &DVector<f64>, x: &DMatrix<f64>, eq: &EquationState) -> DVector<f64> {
    let pm = x.ncols();
    let k = eq.k();
    DVector::from_fn(y.len(), |t, _| {
        let beta = eq.beta_at(t);
        let fit: f64 = (0..pm).map(|c| x[(t, c)] * beta[c]).sum::<f64>() + beta[k - 1];
        y[t] - fit
    })
}

/// Regressors of equation `i` given the residuals of the equations before it.
pub fn compose_equation(
    i: usize,
    filled: &DMatrix<f64>,
    layout: &SweepLayout,
    x: &DMatrix<f64>,
    residuals: &[DVector<f64>],
    eq: &EquationState,
) -> Result<ComposedEquation> {
    let rows = layout.rows();
    let n = rows.len();
    let pm = x.ncols();
    let k = pm + i + 1;
    if eq.k() != k || residuals.len() < i {
        return Err(Error::Dimension(format!("equation {i}: expected K = {k}, state has {}", eq.k())));
    }
    let y = DVector::from_fn(n, |t, _| filled[(rows.start + t, i)]);
    let mut z = DMatrix::zeros(n, k);
    z.view_mut((0, 0), (n, pm)).copy_from(x);
    for (j, res) in residuals.iter().take(i).enumerate() {
        if res.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite residuals of equation {j}")));
        }
        for t in 0..n {
            z[(t, pm + j)] = -res[t];
        }
    }
    z.column_mut(k - 1).fill(1.0);
    let mut aug_z = DMatrix::zeros(n, 2 * k);
    aug_z.view_mut((0, 0), (n, k)).copy_from(&z);
    for t in 0..n {
        for c in 0..k {
            aug_z[(t, k + c)] = eq.tilde_path[(t + 1, c)] * z[(t, c)];
        }
    }
    Ok(ComposedEquation { y, z, aug_z })
}

/// Gaussian posterior draw of a regression block with prior `N(0, diag(ψλ))` and
/// observation variances `exp(log_vol)`.
pub fn draw_constant_block<R: Rng + ?Sized>(
    y: &DVector<f64>,
    design: &DMatrix<f64>,
    hs: &HorseshoeState,
    log_vol: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let d = design.ncols();
    if hs.dim() != d {
        return Err(Error::Dimension(format!("prior has dimension {}, design {d}", hs.dim())));
    }
    let mut precision = DMatrix::from_diagonal(&DVector::from_fn(d, |j, _| {
        1.0 / (hs.psi[j] * hs.lambda).max(PRIOR_VAR_FLOOR)
    }));
    let mut b = DVector::zeros(d);
    if !y.is_empty() {
        let w = DVector::from_fn(y.len(), |t, _| 1.0 / log_vol[t].exp().max(OBS_VAR_FLOOR));
        let mut wz = design.clone();
        for (t, mut row) in wz.row_iter_mut().enumerate() {
            row *= w[t];
        }
        precision += design.transpose() * &wz;
        b += wz.transpose() * y;
    }
    draw_from_precision(&precision, &b, rng, "constant-block posterior")
}
