//! Experiment harness: configs, seeded runs, checkpoints, metrics and
//! ablations.

pub mod ablation;
pub mod checkpoint;
pub mod config;
pub mod metrics;
pub mod runner;
pub mod summary;
pub mod trajectory;

pub use config::RunConfig;
pub use runner::{run_experiment, run_seed, RunStatus};
pub use summary::{summarize_runs, Summary};
