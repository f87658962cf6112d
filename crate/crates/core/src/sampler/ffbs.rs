use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::regression::OBS_VAR_FLOOR;
use crate::error::Result;
use crate::linalg::{cholesky_jitter, psd_factor, standard_normal_vec};

/// Joint draw of the standardized random-walk states given
/// `y_t - β0'z_t = β̃_t'(√v ⊙ z_t) + η_t`, `η_t ~ N(0, exp(h_t))`, `β̃_0 = 0`.
///
/// Returns a (T′+1)×K path whose row 0 is the fixed start.
pub fn ffbs_states<R: Rng + ?Sized>(
    y: &DVector<f64>,
    z: &DMatrix<f64>,
    beta0: &DVector<f64>,
    sqrt_v: &DVector<f64>,
    log_vol: &DVector<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = y.len();
    let k = beta0.len();
    let eye = DMatrix::<f64>::identity(k, k);
    let mut means: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut covs: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut m = DVector::zeros(k);
    let mut c = DMatrix::zeros(k, k);
    for t in 0..n {
        let zt = z.row(t).transpose();
        let f = sqrt_v.component_mul(&zt);
        let target = y[t] - beta0.dot(&zt);
        let r = &c + &eye;
        let rf = &r * &f;
        let s = f.dot(&rf) + log_vol[t].exp().max(OBS_VAR_FLOOR);
        let innov = target - f.dot(&m);
        m += &rf * (innov / s);
        c = r - &rf * rf.transpose() / s;
        c = (&c + c.transpose()) * 0.5;
        means.push(m.clone());
        covs.push(c.clone());
    }

    let mut path = DMatrix::zeros(n + 1, k);
    if n == 0 {
        return Ok(path);
    }
    let last = &means[n - 1] + psd_factor(&covs[n - 1], "filtered state covariance")? * standard_normal_vec(k, rng);
    path.row_mut(n).copy_from(&last.transpose());
    let mut next = last;
    for t in (0..n - 1).rev() {
        // β̃_t | β̃_{t+1}: gain C_t (C_t + I)⁻¹
        let ct = &covs[t];
        let chol = cholesky_jitter(&(ct + &eye), "one-step predictive covariance")?;
        let gain = chol.solve(ct).transpose();
        let mean = &means[t] + &gain * (&next - &means[t]);
        let cov = ct - &gain * ct;
        let draw = mean + psd_factor(&cov, "smoothed state covariance")? * standard_normal_vec(k, rng);
        path.row_mut(t + 1).copy_from(&draw.transpose());
        next = draw;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_step_conjugate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (c, s, r) = (2.0_f64, 0.5_f64, 1.3);
        let y = DVector::from_element(1, r);
        let z = DMatrix::from_element(1, 1, 1.0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let p = ffbs_states(
                &y,
                &z,
                &DVector::zeros(1),
                &DVector::from_element(1, c),
                &DVector::from_element(1, s.ln()),
                &mut rng,
            )
            .unwrap();
            assert_eq!(p[(0, 0)], 0.0);
            sum += p[(1, 0)];
            sq += p[(1, 0)] * p[(1, 0)];
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let want_var = s / (c * c + s);
        assert!((mean - c * r / (c * c + s)).abs() < 3.0 * (want_var / n as f64).sqrt());
        assert!((var - want_var).abs() < 0.01);
    }

    #[test]
    fn zero_loading_gives_prior_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = DVector::from_element(4, 10.0);
        let z = DMatrix::from_element(4, 2, 1.0);
        let p = ffbs_states(&y, &z, &DVector::zeros(2), &DVector::zeros(2), &DVector::zeros(4), &mut rng).unwrap();
        assert_eq!(p.nrows(), 5);
        assert!(p.row(0).iter().all(|v| *v == 0.0));
    }
}
