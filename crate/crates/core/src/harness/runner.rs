//! Seeded multi-run execution.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::Trainer;
use crate::harness::checkpoint;
use crate::harness::config::RunConfig;
use crate::harness::metrics::MetricsWriter;
use crate::harness::summary::{summarize_runs, write_summary, Summary};
use crate::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const STATUS_FILE: &str = "status.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Final state of one seed's run, written next to its metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub seed: u64,
    pub iterations: u64,
    pub env_steps: u64,
    pub grad_steps: u64,
    pub diverged: bool,
    pub error: Option<String>,
    /// Iteration at whose end the curriculum switched phase, if it did.
    pub switch_iteration: Option<u64>,
}

impl RunStatus {
    pub fn switch_env_steps(&self, steps_per_iteration: u64) -> Option<u64> {
        self.switch_iteration.map(|i| i * steps_per_iteration)
    }
}

/// Train one seed to completion, optionally continuing from a checkpoint.
/// A numerical failure ends the run with `diverged` set instead of an error.
pub fn run_seed(cfg: &RunConfig, out: &Path, seed: u64, resume: Option<&Path>) -> Result<RunStatus> {
    let dir = seed_dir(out, seed);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let tc = cfg.trainer_config();
    let spec = cfg.env_spec();
    let metrics_path = dir.join(METRICS_FILE);
    let (mut trainer, mut metrics) = match resume {
        Some(ckpt) => {
            let t = checkpoint::load(ckpt, Some((&tc, &spec)))?;
            if t.seed != seed {
                return Err(Error::Checkpoint(format!("checkpoint is for seed {}, not {seed}", t.seed)));
            }
            let m = MetricsWriter::resume(&metrics_path, t.iteration)?;
            (t, m)
        }
        None => (Trainer::new(tc, spec, seed)?, MetricsWriter::create(&metrics_path)?),
    };
    let mut failure = None;
    while !trainer.is_finished() {
        match trainer.run_iteration() {
            Ok(rec) => {
                metrics.write(&rec)?;
                if rec.switched {
                    info!("seed {seed}: curriculum switched after iteration {}", rec.iteration);
                }
                if cfg.checkpoint_every > 0 && rec.iteration % cfg.checkpoint_every == 0 {
                    checkpoint::save(&trainer, &dir.join(CHECKPOINT_FILE))?;
                }
            }
            Err(Error::Numerical(msg)) => {
                warn!("seed {seed} diverged at iteration {}: {msg}", trainer.iteration + 1);
                failure = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if failure.is_none() {
        checkpoint::save(&trainer, &dir.join(CHECKPOINT_FILE))?;
    }
    if trainer.config.agent.is_curriculum() && trainer.controller.switched_at().is_none() {
        info!("seed {seed}: second phase was never initiated");
    }
    let status = RunStatus {
        seed,
        iterations: trainer.iteration,
        env_steps: trainer.env_steps,
        grad_steps: trainer.grad_steps,
        diverged: failure.is_some(),
        error: failure,
        switch_iteration: trainer.controller.switched_at(),
    };
    let path = dir.join(STATUS_FILE);
    std::fs::write(&path, serde_json::to_vec_pretty(&status)?).map_err(|e| Error::io(&path, e))?;
    Ok(status)
}

/// Run every seed (in parallel), then write `summary.json`.
pub fn run_experiment(cfg: &RunConfig, out: &Path) -> Result<Summary> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let cfg_path = out.join(CONFIG_FILE);
    std::fs::write(&cfg_path, cfg.to_toml_string()?).map_err(|e| Error::io(&cfg_path, e))?;
    let results: Vec<Result<RunStatus>> = cfg.seeds.par_iter().map(|&s| run_seed(cfg, out, s, None)).collect();
    for r in results {
        r?;
    }
    let summary = summarize_runs(out)?;
    write_summary(&summary, &out.join(SUMMARY_FILE))?;
    Ok(summary)
}
