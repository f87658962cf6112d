//! Stochastic-volatility update via the 10-component normal mixture
//! approximation of log χ²₁, an independence Metropolis step for the
//! parameters, and an interweaving step in the non-centered parameterization.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::state::SvState;
use super::PriorConfig;
use crate::error::{Error, Result};
use crate::linalg::{bidiag_backward, bidiag_forward, inv_gamma, tridiag_cholesky};

/// Offset inside `log(η² + c)` guarding exact zeros.
const LOG_OFFSET: f64 = 1e-10;

/// (probability, mean, variance) of the mixture components.
pub const KSC_MIXTURE: [(f64, f64, f64); 10] = [
    (0.00609, 1.92677, 0.11265),
    (0.04775, 1.34744, 0.17788),
    (0.13057, 0.73504, 0.26768),
    (0.20674, 0.02266, 0.40611),
    (0.22715, -0.85173, 0.62699),
    (0.18842, -1.97278, 0.98583),
    (0.12047, -3.46788, 1.57469),
    (0.05591, -5.55246, 2.54498),
    (0.01575, -8.68384, 4.16591),
    (0.00115, -14.65000, 7.33342),
];

/// One sweep of the SV sampler given the equation's structural residuals.
pub fn draw_sv<R: Rng + ?Sized>(
    residuals: &DVector<f64>,
    sv: &SvState,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<SvState> {
    let n = residuals.len();
    if sv.log_vol_path.len() != n {
        return Err(Error::Dimension(format!(
            "{n} residuals but {} log variances",
            sv.log_vol_path.len()
        )));
    }
    if n == 0 {
        return Ok(sv.clone());
    }
    let ystar: Vec<f64> = residuals.iter().map(|e| (e * e + LOG_OFFSET).ln()).collect();

    let comp = draw_indicators(&ystar, sv.log_vol_path.as_slice(), rng);
    let obs_mean: Vec<f64> = comp.iter().map(|&r| KSC_MIXTURE[r].1).collect();
    let obs_var: Vec<f64> = comp.iter().map(|&r| KSC_MIXTURE[r].2).collect();

    let mut h = draw_log_vols(&ystar, &obs_mean, &obs_var, sv.mu, sv.phi, sv.sigma_eta, rng)?;
    let (mut mu, mut phi, mut sigma) = (sv.mu, sv.phi, sv.sigma_eta);

    if n > 2 {
        if let Some((m, p, s)) = propose_parameters(&h, rng) {
            let log_new = log_target(&h, m, p, s, prior);
            let log_old = log_target(&h, mu, phi, sigma, prior);
            let u: f64 = rng.random();
            if u.ln() < log_new - log_old {
                mu = m;
                phi = p;
                sigma = s;
            }
        }
    }

    // interweaving: redraw (μ, ±ς) with the standardized path held fixed
    let tilde: Vec<f64> = h.iter().map(|v| (v - mu) / sigma).collect();
    let mut prec = Matrix2::new(1.0 / prior.sv_mu_var, 0.0, 0.0, 1.0 / prior.sv_sigma_prior_var);
    let mut lin = Vector2::zeros();
    for t in 0..n {
        let x = Vector2::new(1.0, tilde[t + 1]);
        let w = 1.0 / obs_var[t];
        prec += x * x.transpose() * w;
        lin += x * (w * (ystar[t] - obs_mean[t]));
    }
    let chol = prec
        .cholesky()
        .ok_or_else(|| Error::Numerical("volatility level/scale posterior".into()))?;
    let mean = chol.solve(&lin);
    let z = Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
    let dev = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Numerical("volatility level/scale factor".into()))?;
    let draw = mean + dev;
    if draw[1] != 0.0 && draw.iter().all(|v| v.is_finite()) {
        mu = draw[0];
        for (v, t) in h.iter_mut().zip(&tilde) {
            *v = mu + draw[1] * t;
        }
        sigma = draw[1].abs();
    }

    Ok(SvState {
        mu,
        phi,
        sigma_eta: sigma,
        log_vol_init: h[0],
        log_vol_path: DVector::from_column_slice(&h[1..]),
    })
}

fn draw_indicators<R: Rng + ?Sized>(ystar: &[f64], h: &[f64], rng: &mut R) -> Vec<usize> {
    let mut lw = [0.0; 10];
    ystar
        .iter()
        .zip(h)
        .map(|(y, ht)| {
            let d = y - ht;
            for (j, (p, m, v)) in KSC_MIXTURE.iter().enumerate() {
                lw[j] = p.ln() - 0.5 * v.ln() - 0.5 * (d - m) * (d - m) / v;
            }
            let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = lw.iter().map(|l| (l - max).exp()).sum();
            let mut u = rng.random::<f64>() * total;
            for (j, l) in lw.iter().enumerate() {
                u -= (l - max).exp();
                if u <= 0.0 {
                    return j;
                }
            }
            9
        })
        .collect()
}

/// Joint draw of `h_0, ..., h_n` from the Gaussian approximation.
fn draw_log_vols<R: Rng + ?Sized>(
    ystar: &[f64],
    obs_mean: &[f64],
    obs_var: &[f64],
    mu: f64,
    phi: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = ystar.len() + 1;
    let s2 = sigma * sigma;
    let mut diag = vec![(1.0 + phi * phi) / s2; n];
    let mut lin = vec![(1.0 - phi) * (1.0 - phi) * mu / s2; n];
    diag[0] = 1.0 / s2;
    diag[n - 1] = 1.0 / s2;
    lin[0] = (1.0 - phi) * mu / s2;
    lin[n - 1] = (1.0 - phi) * mu / s2;
    for t in 0..n - 1 {
        diag[t + 1] += 1.0 / obs_var[t];
        lin[t + 1] += (ystar[t] - obs_mean[t]) / obs_var[t];
    }
    let off = vec![-phi / s2; n - 1];
    let (d, s) = tridiag_cholesky(&diag, &off)?;
    let mean = bidiag_backward(&d, &s, &bidiag_forward(&d, &s, &lin));
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let dev = bidiag_backward(&d, &s, &z);
    Ok(mean.iter().zip(&dev).map(|(m, e)| m + e).collect())
}

/// AR(1) regression of `h_t` on `(1, h_{t-1})` under the reference prior.
fn propose_parameters<R: Rng + ?Sized>(h: &[f64], rng: &mut R) -> Option<(f64, f64, f64)> {
    let n = h.len() - 1;
    let x = DMatrix::from_fn(n, 2, |t, c| if c == 0 { 1.0 } else { h[t] });
    let y = DVector::from_column_slice(&h[1..]);
    let xtx = x.transpose() * &x;
    let chol = xtx.clone().cholesky()?;
    let coef = chol.solve(&(x.transpose() * &y));
    let ssr = (&y - &x * &coef).norm_squared();
    if !(ssr > 0.0) {
        return None;
    }
    let s2 = inv_gamma((n as f64 - 2.0) / 2.0, ssr / 2.0, rng);
    let z = DVector::from_fn(2, |_, _| StandardNormal.sample(rng));
    let dev = chol.l().transpose().solve_upper_triangular(&z)? * s2.sqrt();
    let gamma = coef[0] + dev[0];
    let phi = coef[1] + dev[1];
    if phi.abs() >= 1.0 || !gamma.is_finite() {
        return None;
    }
    Some((gamma / (1.0 - phi), phi, s2.sqrt()))
}

/// Log of (stationary initial density × priors) in proposal coordinates.
fn log_target(h: &[f64], mu: f64, phi: f64, sigma: f64, prior: &PriorConfig) -> f64 {
    if phi.abs() >= 1.0 || sigma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let init_var = sigma * sigma / (1.0 - phi * phi);
    let d0 = h[0] - mu;
    let log_init = -0.5 * init_var.ln() - 0.5 * d0 * d0 / init_var;
    let log_mu = -0.5 * mu * mu / prior.sv_mu_var;
    let (a, b) = prior.sv_phi_beta;
    let u = (1.0 + phi) / 2.0;
    let log_phi = (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln();
    let log_sigma = -0.5 * sigma * sigma / prior.sv_sigma_prior_var;
    let jacobian = -((1.0 - phi) * 2.0 * sigma).ln() + 2.0 * sigma.ln();
    log_init + log_mu + log_phi + log_sigma + jacobian
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mixture_weights_sum_to_one() {
        let total: f64 = KSC_MIXTURE.iter().map(|c| c.0).sum();
        assert!((total - 1.0).abs() < 1e-4);
    }

    #[test]
    fn persistence_stays_inside_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let res = DVector::from_fn(200, |_, _| StandardNormal.sample(&mut rng));
        let mut sv = SvState {
            mu: 0.0,
            phi: 0.9,
            sigma_eta: 0.2,
            log_vol_init: 0.0,
            log_vol_path: DVector::zeros(200),
        };
        let prior = PriorConfig::default();
        for _ in 0..300 {
            sv = draw_sv(&res, &sv, &prior, &mut rng).unwrap();
            assert!(sv.phi.abs() < 1.0 && sv.sigma_eta > 0.0);
        }
    }

    #[test]
    fn zero_residuals_do_not_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sv = SvState {
            mu: 0.0,
            phi: 0.9,
            sigma_eta: 0.2,
            log_vol_init: 0.0,
            log_vol_path: DVector::zeros(20),
        };
        let out = draw_sv(&DVector::zeros(20), &sv, &PriorConfig::default(), &mut rng).unwrap();
        assert!(out.log_vol_path.iter().all(|v| v.is_finite()));
    }
}
