//! Gibbs sampler for the triangular, non-centered TVP-VAR with stochastic
//! volatility and equation-wise horseshoe shrinkage.
//!
//! Each equation `i` is a regression of `y_it` on
//! `z_it = (x_t', -ε_1t, ..., -ε_{i-1,t}, 1)'` where `x_t` stacks the `P` lags
//! and `ε_jt` are the reduced-form residuals of the preceding equations. The
//! coefficients are `β_it = β_i0 + √v_i ⊙ β̃_it` with `β̃_it` a standard random
//! walk started at zero, so the constant block `(β_i0, √v_i)` is an ordinary
//! regression target given the state path.

mod chain;
mod ffbs;
mod horseshoe;
mod regression;
mod state;
mod store;
mod sv;

use serde::{Deserialize, Serialize};

pub use chain::{gibbs_sweep, run_chain, SweepLayout};
pub use ffbs::ffbs_states;
pub use horseshoe::draw_horseshoe;
pub use regression::{compose_equation, draw_constant_block, lag_matrix, reduced_form_residual, ComposedEquation};
pub use state::{ChainState, EquationState, HorseshoeState, SvState, SweepCounters, SystemMatrices, TerminalState};
pub use store::{DrawStore, RetainedDraw, SvParams};
pub use sv::{draw_sv, KSC_MIXTURE};

/// Which auxiliary-variable rates the horseshoe update uses.
///
/// `MakalicSchmidt` uses the `1 + ψ⁻¹`, `1 + λ⁻¹` rates that follow from the
/// `ψ | ζ ~ IG(1/2, 1/ζ)`, `ζ ~ IG(1/2, 1)` hierarchy. `AsPrinted` squares the
/// inverted scales (`1 + ψ⁻²`, `1 + λ⁻²`); it is not the conditional of that
/// hierarchy and drives moderate coefficients to zero, so it is opt-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorseshoeAux {
    #[default]
    MakalicSchmidt,
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Prior variance of the log-volatility level μ.
    pub sv_mu_var: f64,
    /// Beta(a, b) prior on (φ + 1) / 2.
    pub sv_phi_beta: (f64, f64),
    /// ±ς ~ N(0, this).
    pub sv_sigma_prior_var: f64,
    #[serde(default)]
    pub horseshoe_aux: HorseshoeAux,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            sv_mu_var: 100.0,
            sv_phi_beta: (25.0, 5.0),
            sv_sigma_prior_var: 1.0,
            horseshoe_aux: HorseshoeAux::MakalicSchmidt,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let (a, b) = self.sv_phi_beta;
        if self.sv_mu_var > 0.0 && a > 0.0 && b > 0.0 && self.sv_sigma_prior_var > 0.0 {
            Ok(())
        } else {
            Err(crate::Error::Config("prior hyperparameters must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub draws: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub lags: usize,
    /// Time-varying parameters; `false` gives the constant-parameter model.
    pub tvp: bool,
    #[serde(default)]
    pub prior: PriorConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            draws: 6000,
            burn_in: 2000,
            thin: 2,
            lags: 2,
            tvp: false,
            prior: PriorConfig::default(),
        }
    }
}

impl SamplerConfig {
    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        if self.thin == 0 || self.draws <= self.burn_in {
            0
        } else {
            (self.draws - self.burn_in) / self.thin
        }
    }

    /// Is (1-based) sweep `k` kept?
    pub fn keeps(&self, k: usize) -> bool {
        k > self.burn_in && (k - self.burn_in).is_multiple_of(self.thin)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.lags == 0 {
            return Err(crate::Error::Config("lags must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(crate::Error::Config("thin must be at least 1".into()));
        }
        if self.retained() == 0 {
            return Err(crate::Error::Config("sampler keeps no draws".into()));
        }
        self.prior.validate()
    }

    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retained_counts() {
        let cfg = SamplerConfig { draws: 4, burn_in: 2, thin: 2, ..Default::default() };
        assert_eq!(cfg.retained(), 1);
        assert_eq!((1..=4).filter(|&k| cfg.keeps(k)).count(), 1);
        let d = SamplerConfig::default();
        assert_eq!(d.retained(), 2000);
        assert_eq!((1..=d.draws).filter(|&k| d.keeps(k)).count(), 2000);
        assert_eq!(d.lags, 2);
    }
}
