//! Iterated multi-step forecast moments from the companion form, and
//! predictive draws from a fitted chain.

use nalgebra::{DMatrix, DVector};
use rtvar::forecast::{build_companion, draw_forecasts, forecast_path};
use rtvar::panel::{standardize, Panel};
use rtvar::sampler::{run_chain, SamplerConfig};
use rtvar::Month;

fn main() -> rtvar::Result<()> {
    let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.3]);
    let a2 = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.1]);
    let companion = build_companion(&[a1, a2], &DVector::from_vec(vec![0.1, 0.0]))?;
    let omega = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
    let stack = DVector::from_vec(vec![1.0, 0.5, 0.8, 0.2]);
    for f in forecast_path(&companion, &omega, &stack, &[1, 3, 12])? {
        println!(
            "h = {:2}: mean [{:.3}, {:.3}] var [{:.3}, {:.3}]",
            f.horizon,
            f.mean[0],
            f.mean[1],
            f.cov[(0, 0)],
            f.cov[(1, 1)]
        );
    }

    let values = DMatrix::from_fn(150, 2, |r, c| ((r + 7 * c) as f64 / 9.0).cos() + 0.01 * r as f64);
    let panel = standardize(&Panel::from_matrix(values, Month::new(2005, 1).expect("valid month"), vec!["a".into(), "b".into()])?)?;
    let cfg = SamplerConfig {
        draws: 800,
        burn_in: 300,
        thin: 1,
        ..SamplerConfig::default()
    };
    let store = run_chain(&panel, &cfg, 9)?;
    let draws = draw_forecasts(&store, &panel.std_info, &[1, 6], &[0, 1], 10)?;
    for (hi, h) in draws.horizons.iter().enumerate() {
        println!("origin {} + {h}: point forecast of a = {:.3}", draws.origin.expect("dated origin"), draws.point(hi, 0));
    }
    Ok(())
}
