//! Ragged-edge nowcasting: condition a Gaussian on the observed series, then
//! let the sampler fill the missing end of a panel.

use nalgebra::{DMatrix, DVector};
use rtvar::nowcast::partition_moments;
use rtvar::panel::Panel;
use rtvar::sampler::{run_chain, SamplerConfig};
use rtvar::Month;

fn main() -> rtvar::Result<()> {
    let mu = DVector::from_vec(vec![0.0, 0.0, 0.0]);
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.8, 0.3, 0.8, 1.0, 0.2, 0.3, 0.2, 1.0]);
    let cm = partition_moments(&mu, &sigma, &[0], &DVector::from_vec(vec![1.5, -0.5]))?;
    println!("E[y0 | y1 = 1.5, y2 = -0.5] = {:.3}, var {:.3}", cm.mean[0], cm.cov[(0, 0)]);

    // a co-moving pair where the second series is published two months later
    let t = 120;
    let mut values = DMatrix::from_fn(t, 2, |r, c| ((r as f64) / 6.0).sin() + 0.1 * c as f64);
    values[(t - 1, 1)] = f64::NAN;
    values[(t - 2, 1)] = f64::NAN;
    let panel = Panel::from_matrix(values.clone(), Month::new(2010, 1).expect("valid month"), vec!["fast".into(), "slow".into()])?;
    let cfg = SamplerConfig {
        draws: 1000,
        burn_in: 400,
        thin: 2,
        ..SamplerConfig::default()
    };
    let store = run_chain(&panel, &cfg, 3)?;
    for (k, &(row, col)) in store.imputed_cells.iter().enumerate() {
        let draws: Vec<f64> = store.draws.iter().map(|d| d.imputed[k]).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let would_be = ((row as f64) / 6.0).sin() + 0.1;
        println!("row {row} series {}: nowcast {mean:.3} (pattern value {would_be:.3})", panel.codes[col]);
    }
    Ok(())
}
