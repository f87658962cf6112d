//! Fit constant- and time-varying-parameter VARs to a simulated panel and
//! compare posterior means with the truth.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rtvar::panel::Panel;
use rtvar::sampler::{run_chain, SamplerConfig};
use rtvar::Month;

fn main() -> rtvar::Result<()> {
    let a1 = DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.0, 0.4]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut y = DMatrix::zeros(250, 2);
    for t in 1..250 {
        let e = DVector::from_fn(2, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let row = &a1 * y.row(t - 1).transpose() + e * 0.5;
        y.row_mut(t).copy_from(&row.transpose());
    }
    let panel = Panel::from_matrix(y, Month::new(2000, 1).expect("valid month"), vec!["x".into(), "z".into()])?;

    for tvp in [false, true] {
        let cfg = SamplerConfig {
            draws: 2000,
            burn_in: 1000,
            thin: 2,
            lags: 1,
            tvp,
            ..SamplerConfig::default()
        };
        let store = run_chain(&panel, &cfg, 1)?;
        let mean_a = store.draws.iter().fold(DMatrix::zeros(2, 2), |acc, d| acc + &d.a) / store.len() as f64;
        let mean_h: f64 = store.draws.iter().map(|d| d.log_vol[0]).sum::<f64>() / store.len() as f64;
        println!("tvp = {tvp}: {} draws, terminal A1 posterior mean {mean_a:.3}", store.len());
        println!("  terminal log-variance of x: {mean_h:.3} (truth {:.3})", (0.25f64).ln());
    }
    println!("truth A1 {a1:.3}");
    Ok(())
}
