//! Experiment harness: configuration, synthetic archives, the real-time vs
//! pseudo experiment, evaluation and reporting.

pub mod config;
pub mod evaluate;
pub mod experiment;
pub mod report;
pub mod synth;

pub use config::{Dataset, ExperimentConfig, ModelSpec, VintageFormat};
pub use evaluate::{evaluate, Evaluation, ScoreKind};
pub use experiment::{cell_seed, derive_seed, run_experiment, CellStatus, ResultStore, RunManifest, RunSummary};
pub use report::{report, Report};
pub use synth::{generate_synthetic_vintages, SyntheticArchive, SyntheticSpec};
