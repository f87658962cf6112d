use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::chain::SweepLayout;
use crate::error::{Error, Result};
use crate::panel::Panel;

/// Per-equation coefficients in non-centered form.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationState {
    /// Constant part: `P·M` lag coefficients, `i−1` covariance loadings, intercept.
    pub beta0: DVector<f64>,
    /// Signed square roots of the state-innovation variances.
    pub sqrt_v: DVector<f64>,
    /// (T′+1)×K standardized state path; row 0 is the fixed zero start.
    pub tilde_path: DMatrix<f64>,
}

impl EquationState {
    pub fn k(&self) -> usize {
        self.beta0.len()
    }

    /// Coefficients at observation row `t` (0-based, so path row `t + 1`).
    pub fn beta_at(&self, t: usize) -> DVector<f64> {
        let tilde = self.tilde_path.row(t + 1).transpose();
        &self.beta0 + self.sqrt_v.component_mul(&tilde)
    }
}

/// Horseshoe scales for one equation. `psi` and `zeta` have the dimension of the
/// shrunk block (`2K` with time variation, `K` without).
#[derive(Debug, Clone, PartialEq)]
pub struct HorseshoeState {
    pub lambda: f64,
    pub psi: DVector<f64>,
    pub zeta: DVector<f64>,
    /// Auxiliary of the global scale (not the volatility persistence).
    pub varphi: f64,
}

impl HorseshoeState {
    pub fn unit(dim: usize) -> Self {
        HorseshoeState {
            lambda: 1.0,
            psi: DVector::from_element(dim, 1.0),
            zeta: DVector::from_element(dim, 1.0),
            varphi: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }
}

/// Log-AR(1) stochastic volatility of one equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SvState {
    pub mu: f64,
    /// Persistence, |phi| < 1.
    pub phi: f64,
    /// Innovation standard deviation of the log variance.
    pub sigma_eta: f64,
    /// Pre-sample log variance.
    pub log_vol_init: f64,
    /// Log variances at the T′ observation rows.
    pub log_vol_path: DVector<f64>,
}

/// Coefficients and log variances at the last period of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalState {
    pub beta: Vec<DVector<f64>>,
    pub log_vol: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepCounters {
    pub sweeps: usize,
    pub ffbs_calls: usize,
    pub imputation_calls: usize,
}

/// All unknowns of one sweep plus the chain's private random stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub equations: Vec<EquationState>,
    pub shrinkage: Vec<HorseshoeState>,
    pub vols: Vec<SvState>,
    /// Panel values with masked cells replaced by their current imputations.
    pub filled: DMatrix<f64>,
    pub terminal: TerminalState,
    pub rng: ChaCha8Rng,
    pub counters: SweepCounters,
}

impl ChainState {
    /// Neutral starting point inside every support: zero coefficients,
    /// `√v = 0.01` (0 without time variation), unit shrinkage scales,
    /// `μ = 0, φ = 0.9, ς = 0.2`, masked cells at zero.
    pub fn initial(panel: &Panel, lags: usize, tvp: bool, seed: u64) -> Self {
        let m = panel.ncols();
        let t_obs = SweepLayout::estimation_rows(panel).saturating_sub(lags);
        let mut equations = Vec::with_capacity(m);
        let mut shrinkage = Vec::with_capacity(m);
        let mut vols = Vec::with_capacity(m);
        for i in 0..m {
            let k = lags * m + i + 1;
            equations.push(EquationState {
                beta0: DVector::zeros(k),
                sqrt_v: DVector::from_element(k, if tvp { 0.01 } else { 0.0 }),
                tilde_path: DMatrix::zeros(t_obs + 1, k),
            });
            shrinkage.push(HorseshoeState::unit(if tvp { 2 * k } else { k }));
            vols.push(SvState {
                mu: 0.0,
                phi: 0.9,
                sigma_eta: 0.2,
                log_vol_init: 0.0,
                log_vol_path: DVector::zeros(t_obs),
            });
        }
        ChainState {
            terminal: TerminalState {
                beta: equations.iter().map(|e| e.beta0.clone()).collect(),
                log_vol: vec![0.0; m],
            },
            equations,
            shrinkage,
            vols,
            filled: panel.filled_with(0.0),
            rng: ChaCha8Rng::seed_from_u64(seed),
            counters: SweepCounters::default(),
        }
    }

    pub fn n_equations(&self) -> usize {
        self.equations.len()
    }

    /// Values currently imputed at the panel's masked cells (row-major order).
    pub fn imputed_values(&self, panel: &Panel) -> Vec<f64> {
        panel
            .missing_cells()
            .into_iter()
            .map(|(t, j)| self.filled[(t, j)])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        let vec_ok = |v: &DVector<f64>| v.iter().all(|x| x.is_finite());
        self.equations
            .iter()
            .all(|e| vec_ok(&e.beta0) && vec_ok(&e.sqrt_v) && e.tilde_path.iter().all(|x| x.is_finite()))
            && self.shrinkage.iter().all(|h| {
                h.lambda.is_finite() && h.varphi.is_finite() && vec_ok(&h.psi) && vec_ok(&h.zeta)
            })
            && self
                .vols
                .iter()
                .all(|s| s.mu.is_finite() && s.phi.is_finite() && s.sigma_eta.is_finite() && vec_ok(&s.log_vol_path))
            && self.filled.iter().all(|x| x.is_finite())
    }

    /// Digest over every numeric quantity and the random stream position.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |xs: &[f64]| {
            for x in xs {
                h.update(x.to_bits().to_le_bytes());
            }
        };
        for e in &self.equations {
            put(e.beta0.as_slice());
            put(e.sqrt_v.as_slice());
            put(e.tilde_path.as_slice());
        }
        for s in &self.shrinkage {
            put(&[s.lambda, s.varphi]);
            put(s.psi.as_slice());
            put(s.zeta.as_slice());
        }
        for v in &self.vols {
            put(&[v.mu, v.phi, v.sigma_eta, v.log_vol_init]);
            put(v.log_vol_path.as_slice());
        }
        put(self.filled.as_slice());
        for b in &self.terminal.beta {
            put(b.as_slice());
        }
        put(&self.terminal.log_vol);
        h.update(self.rng.get_word_pos().to_le_bytes());
        hex::encode(h.finalize())
    }
}


/// Reduced-form matrices implied by one coefficient vector per equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    /// M×PM lag coefficients `(A_1, ..., A_P)`.
    pub a: DMatrix<f64>,
    pub intercept: DVector<f64>,
    /// Unit lower-triangular `G` with `G ε_t = η_t`.
    pub g: DMatrix<f64>,
    /// `Ω = G⁻¹ diag(exp h) G⁻ᵀ`.
    pub omega: DMatrix<f64>,
}

impl SystemMatrices {
    pub fn from_betas(betas: &[DVector<f64>], lags: usize, log_vol: &[f64]) -> Result<Self> {
        let m = betas.len();
        let pm = lags * m;
        let mut a = DMatrix::zeros(m, pm);
        let mut intercept = DVector::zeros(m);
        let mut g = DMatrix::identity(m, m);
        for (i, b) in betas.iter().enumerate() {
            if b.len() != pm + i + 1 {
                return Err(Error::Dimension(format!(
                    "equation {i} has {} coefficients, expected {}",
                    b.len(),
                    pm + i + 1
                )));
            }
            for c in 0..pm {
                a[(i, c)] = b[c];
            }
            for j in 0..i {
                g[(i, j)] = b[pm + j];
            }
            intercept[i] = b[pm + i];
        }
        let g_inv = g
            .clone()
            .solve_lower_triangular(&DMatrix::identity(m, m))
            .ok_or_else(|| Error::Numerical("triangular factor is singular".into()))?;
        let sigma = DMatrix::from_diagonal(&DVector::from_iterator(m, log_vol.iter().map(|h| h.exp())));
        let omega = &g_inv * sigma * g_inv.transpose();
        let omega = (&omega + omega.transpose()) * 0.5;
        Ok(SystemMatrices { a, intercept, g, omega })
    }

    /// Conditional mean `A x + c` of one period given its stacked lags.
    pub fn fitted(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.intercept
    }
}
