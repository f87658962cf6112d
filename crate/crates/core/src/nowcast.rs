//! Conditional-Gaussian imputation of missing values, period by period.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jitter, draw_mvn};
use crate::panel::Panel;
use crate::sampler::{ChainState, SweepLayout, SystemMatrices, TerminalState};

/// Moments of the missing block given the observed one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub missing_idx: Vec<usize>,
}

/// Condition `N(mu, sigma)` on the series outside `missing_idx` taking the
/// values `realized` (ordered by ascending series index).
pub fn partition_moments(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    missing_idx: &[usize],
    realized: &DVector<f64>,
) -> Result<ConditionalMoments> {
    let m = mu.len();
    if sigma.shape() != (m, m) {
        return Err(Error::Dimension(format!("mean has {m} entries, covariance is {:?}", sigma.shape())));
    }
    if missing_idx.is_empty() || missing_idx.iter().any(|&i| i >= m) {
        return Err(Error::Dimension(format!("missing indices {missing_idx:?} for {m} series")));
    }
    let observed: Vec<usize> = (0..m).filter(|i| !missing_idx.contains(i)).collect();
    if realized.len() != observed.len() {
        return Err(Error::Dimension(format!(
            "{} realized values for {} observed series",
            realized.len(),
            observed.len()
        )));
    }
    let q = missing_idx.len();
    let s11 = DMatrix::from_fn(q, q, |r, c| sigma[(missing_idx[r], missing_idx[c])]);
    let mu1 = DVector::from_fn(q, |r, _| mu[missing_idx[r]]);
    if observed.is_empty() {
        return Ok(ConditionalMoments {
            mean: mu1,
            cov: s11,
            missing_idx: missing_idx.to_vec(),
        });
    }
    let o = observed.len();
    let s12 = DMatrix::from_fn(q, o, |r, c| sigma[(missing_idx[r], observed[c])]);
    let s22 = DMatrix::from_fn(o, o, |r, c| sigma[(observed[r], observed[c])]);
    let dev = DVector::from_fn(o, |r, _| realized[r] - mu[observed[r]]);
    let chol = cholesky_jitter(&s22, "observed-block covariance")?;
    // Σ₁₂ Σ₂₂⁻¹ as the transpose of Σ₂₂⁻¹ Σ₂₁
    let gain = chol.solve(&s12.transpose()).transpose();
    let mean = mu1 + &gain * dev;
    let cov = s11 - &gain * s12.transpose();
    Ok(ConditionalMoments {
        mean,
        cov: (&cov + cov.transpose()) * 0.5,
        missing_idx: missing_idx.to_vec(),
    })
}

pub fn draw_missing<R: Rng + ?Sized>(cm: &ConditionalMoments, rng: &mut R) -> Result<DVector<f64>> {
    draw_mvn(&cm.mean, &cm.cov, rng, "conditional covariance")
}

/// Impute every masked cell at or after the first lag-complete row, walking
/// forward in time. Rows inside the estimation sample use that period's
/// coefficient and volatility draws; ragged-edge rows advance the random-walk
/// states and the log-AR(1) volatilities by one simulated step each. The chain's
/// terminal state is set to the last grid row.
pub fn impute_ragged_edge(state: &mut ChainState, panel: &Panel, layout: &SweepLayout) -> Result<()> {
    let lags = layout.lags;
    let m = panel.ncols();
    let t_obs = layout.t_obs();

    for t in layout.rows() {
        let missing: Vec<usize> = (0..m).filter(|&j| !panel.mask[(t, j)]).collect();
        if missing.is_empty() {
            continue;
        }
        let r = t - lags;
        let betas: Vec<DVector<f64>> = state.equations.iter().map(|e| e.beta_at(r)).collect();
        let log_vol: Vec<f64> = state.vols.iter().map(|v| v.log_vol_path[r]).collect();
        impute_row(state, panel, t, &missing, &betas, &log_vol, lags)?;
    }

    let mut tilde: Vec<DVector<f64>> = state
        .equations
        .iter()
        .map(|e| e.tilde_path.row(t_obs).transpose())
        .collect();
    let mut log_vol: Vec<f64> = state.vols.iter().map(|v| v.log_vol_path[t_obs - 1]).collect();
    let mut betas: Vec<DVector<f64>> = state.equations.iter().map(|e| e.beta_at(t_obs - 1)).collect();
    let tvp = state.equations.iter().any(|e| e.sqrt_v.iter().any(|v| *v != 0.0));
    for t in layout.edge_rows() {
        for (i, eq) in state.equations.iter().enumerate() {
            if tvp {
                for v in tilde[i].iter_mut() {
                    *v += <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut state.rng);
                }
                betas[i] = &eq.beta0 + eq.sqrt_v.component_mul(&tilde[i]);
            }
            let sv = &state.vols[i];
            let xi: f64 = StandardNormal.sample(&mut state.rng);
            log_vol[i] = sv.mu + sv.phi * (log_vol[i] - sv.mu) + sv.sigma_eta * xi;
        }
        let missing: Vec<usize> = (0..m).filter(|&j| !panel.mask[(t, j)]).collect();
        if !missing.is_empty() {
            impute_row(state, panel, t, &missing, &betas, &log_vol, lags)?;
        }
    }
    state.terminal = TerminalState { beta: betas, log_vol };
    Ok(())
}

fn impute_row(
    state: &mut ChainState,
    panel: &Panel,
    t: usize,
    missing: &[usize],
    betas: &[DVector<f64>],
    log_vol: &[f64],
    lags: usize,
) -> Result<()> {
    let m = panel.ncols();
    let sys = SystemMatrices::from_betas(betas, lags, log_vol)?;
    let x = DVector::from_fn(lags * m, |c, _| state.filled[(t - c / m - 1, c % m)]);
    let mu = sys.fitted(&x);
    let realized = DVector::from_iterator(
        m - missing.len(),
        (0..m).filter(|j| !missing.contains(j)).map(|j| panel.values[(t, j)]),
    );
    let cm = partition_moments(&mu, &sys.omega, missing, &realized)?;
    let draw = draw_missing(&cm, &mut state.rng)?;
    for (k, &j) in missing.iter().enumerate() {
        state.filled[(t, j)] = draw[k];
    }
    Ok(())
}
