use std::ops::Range;

use nalgebra::DVector;

use super::ffbs::ffbs_states;
use super::horseshoe::draw_horseshoe;
use super::regression::{compose_equation, draw_constant_block, lag_matrix, reduced_form_residual};
use super::state::{ChainState, TerminalState};
use super::store::{DrawStore, RetainedDraw};
use super::sv::draw_sv;
use super::SamplerConfig;
use crate::error::{Error, Result};
use crate::nowcast::impute_ragged_edge;
use crate::panel::Panel;

/// Row bookkeeping of one panel: the first `lags` rows are pre-sample, rows
/// `lags..estimation_end` enter the likelihood, later rows form the ragged edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepLayout {
    pub lags: usize,
    pub n_rows: usize,
    pub estimation_end: usize,
}

impl SweepLayout {
    pub fn new(panel: &Panel, lags: usize) -> Result<Self> {
        let estimation_end = Self::estimation_rows(panel);
        if estimation_end < lags + 3 {
            return Err(Error::Config(format!(
                "panel has {estimation_end} rows up to its last complete period; need more than {} for {lags} lags",
                lags + 2
            )));
        }
        Ok(SweepLayout {
            lags,
            n_rows: panel.nrows(),
            estimation_end,
        })
    }

    /// One past the last fully observed row.
    pub fn estimation_rows(panel: &Panel) -> usize {
        panel.last_complete_row().map_or(0, |t| t + 1)
    }

    pub fn rows(&self) -> Range<usize> {
        self.lags..self.estimation_end
    }

    pub fn t_obs(&self) -> usize {
        self.estimation_end - self.lags
    }

    pub fn edge_rows(&self) -> Range<usize> {
        self.estimation_end..self.n_rows
    }
}

/// One Gibbs sweep: per equation the constant block, the state path (with time
/// variation), the shrinkage scales and the volatilities; then imputation.
pub fn gibbs_sweep(state: &mut ChainState, panel: &Panel, layout: &SweepLayout, cfg: &SamplerConfig) -> Result<()> {
    let x = lag_matrix(&state.filled, layout.lags, layout.rows());
    let m = state.n_equations();
    let mut residuals: Vec<DVector<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let comp = compose_equation(i, &state.filled, layout, &x, &residuals, &state.equations[i])?;
        let k = comp.z.ncols();
        let ChainState {
            equations,
            shrinkage,
            vols,
            rng,
            counters,
            ..
        } = &mut *state;
        let eq = &mut equations[i];
        let log_vol = &vols[i].log_vol_path;
        let b = if cfg.tvp {
            let b = draw_constant_block(&comp.y, &comp.aug_z, &shrinkage[i], log_vol, rng)?;
            eq.beta0 = b.rows(0, k).into_owned();
            eq.sqrt_v = b.rows(k, k).into_owned();
            eq.tilde_path = ffbs_states(&comp.y, &comp.z, &eq.beta0, &eq.sqrt_v, log_vol, rng)?;
            counters.ffbs_calls += 1;
            b
        } else {
            let b = draw_constant_block(&comp.y, &comp.z, &shrinkage[i], log_vol, rng)?;
            eq.beta0 = b.clone();
            b
        };
        shrinkage[i] = draw_horseshoe(&b, &shrinkage[i], cfg.prior.horseshoe_aux, rng);
        let eta = DVector::from_fn(comp.y.len(), |t, _| comp.y[t] - eq.beta_at(t).dot(&comp.z.row(t).transpose()));
        vols[i] = draw_sv(&eta, &vols[i], &cfg.prior, rng)?;
        residuals.push(reduced_form_residual(&comp.y, &x, eq));
    }
    if panel.missing_count() > 0 {
        impute_ragged_edge(state, panel, layout)?;
        state.counters.imputation_calls += 1;
    } else {
        state.terminal = in_sample_terminal(state, layout);
    }
    state.counters.sweeps += 1;
    Ok(())
}

/// Coefficients and log variances at the last estimation row.
pub(crate) fn in_sample_terminal(state: &ChainState, layout: &SweepLayout) -> TerminalState {
    let last = layout.t_obs() - 1;
    TerminalState {
        beta: state.equations.iter().map(|e| e.beta_at(last)).collect(),
        log_vol: state.vols.iter().map(|v| v.log_vol_path[last]).collect(),
    }
}

/// Run `cfg.draws` sweeps from the neutral starting point and keep every
/// `thin`-th draw after burn-in.
pub fn run_chain(panel: &Panel, cfg: &SamplerConfig, seed: u64) -> Result<DrawStore> {
    cfg.validate()?;
    let layout = SweepLayout::new(panel, cfg.lags)?;
    let mut state = ChainState::initial(panel, cfg.lags, cfg.tvp, seed);
    let mut draws = Vec::with_capacity(cfg.retained());
    for k in 1..=cfg.draws {
        gibbs_sweep(&mut state, panel, &layout, cfg).map_err(|e| match e {
            Error::Numerical(what) => Error::NonFinite { sweep: k, what },
            other => other,
        })?;
        if !state.is_finite() {
            return Err(Error::NonFinite {
                sweep: k,
                what: "chain state".into(),
            });
        }
        if cfg.keeps(k) {
            draws.push(RetainedDraw::from_state(&state, panel, cfg.lags)?);
        }
    }
    Ok(DrawStore {
        codes: panel.codes.clone(),
        lags: cfg.lags,
        seed,
        config_hash: cfg.hash(),
        origin: panel.end(),
        imputed_cells: panel.missing_cells(),
        draws,
    })
}
