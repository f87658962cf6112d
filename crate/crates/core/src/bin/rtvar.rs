use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rtvar::harness::{evaluate, generate_synthetic_vintages, report, run_experiment, ExperimentConfig, ResultStore, SyntheticSpec};

#[derive(Parser)]
#[command(name = "rtvar", version, about = "Real-time vs pseudo out-of-sample VAR forecast experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic vintage archive.
    Synth {
        /// JSON synthetic spec; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit and forecast every model, information set and holdout month.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a finished run against the final vintage.
    Evaluate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Build figure-ready tables from an evaluated run.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> rtvar::Result<ExitCode> {
    match command {
        Command::Synth { config, seed, out } => {
            let mut spec = match config {
                Some(path) => SyntheticSpec::load(&path)?,
                None => SyntheticSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let archive = generate_synthetic_vintages(&spec, &out)?;
            log::info!("wrote {} vintages to {}", archive.releases.len(), out.display());
        }
        Command::Run { config, seed, jobs, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let summary = run_experiment(&cfg, &out, jobs)?;
            let failed = summary.failed();
            log::info!("{} cells, {failed} failed", summary.manifest.cells.len());
            if failed > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Evaluate { out } => {
            let eval = evaluate(&ResultStore::new(out))?;
            log::info!("{} score rows, {} targets skipped", eval.scores.rows.len(), eval.skipped_targets);
        }
        Command::Report { out } => {
            let r = report(&ResultStore::new(out))?;
            log::info!("report over {} models", r.models.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}
