//! A small real-time vs pseudo out-of-sample experiment on synthetic vintages:
//! generate, run, evaluate and report, as the `rtvar` binary does.

use rtvar::harness::{
    evaluate, generate_synthetic_vintages, report, run_experiment, Dataset, ExperimentConfig, SyntheticSpec,
};
use rtvar::sampler::SamplerConfig;
use rtvar::score::InfoSet;

fn main() -> rtvar::Result<()> {
    let root = std::env::temp_dir().join("rtvar-example-experiment");
    let spec = SyntheticSpec {
        n_vintages: 7,
        ..SyntheticSpec::default()
    };
    let archive = generate_synthetic_vintages(&spec, &root.join("data"))?;
    let holdout = &archive.releases[..archive.releases.len() - 1];

    let mut cfg = ExperimentConfig::new(Dataset::Synthetic, root.join("data"), holdout[0], holdout[holdout.len() - 1]);
    cfg.models = vec!["small-cp".parse()?, "small-cp-pca".parse()?];
    cfg.horizons = vec![1, 3];
    cfg.sampler = SamplerConfig {
        draws: 600,
        burn_in: 200,
        thin: 2,
        ..SamplerConfig::default()
    };
    cfg.seed = 42;

    let run = run_experiment(&cfg, &root.join("out"), 1)?;
    println!("{} cells, {} failed", run.manifest.cells.len(), run.failed());
    let eval = evaluate(&run.store)?;
    for ((mode, var, model, h), cell) in &eval.summary {
        if var == "joint" && *mode == InfoSet::Realtime {
            println!("{model} h={h}: average joint LPS {:.3}, rank {}", cell.mean_lps, cell.lps_rank);
        }
    }
    let rep = report(&run.store)?;
    println!("report tables in {}: {} tau points", run.store.report_dir().display(), rep.tau.len());
    Ok(())
}
