//! Per-seed and across-seed summaries of finished runs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::metrics::{read_metrics, MetricsRow};
use crate::harness::runner::{RunStatus, METRICS_FILE, STATUS_FILE};
use crate::{Error, Result};

/// Results are averaged over evaluations in the final stretch of training.
pub const SUMMARY_WINDOW_STEPS: u64 = 50_000;

/// Metrics summarized per seed, by name.
pub const SUMMARY_METRICS: [&str; 6] = [
    "eval_reported",
    "eval_normalized",
    "eval_base",
    "eval_constraint",
    "eval_success",
    "eval_abs_action",
];

/// Numeric metrics column by name.
pub fn metric_by_name(row: &MetricsRow, name: &str) -> Option<f64> {
    match name {
        "eval_return" => row.eval_return,
        "eval_reported" => row.eval_reported,
        "eval_normalized" => row.eval_normalized,
        "eval_base" => row.eval_base,
        "eval_constraint" => row.eval_constraint,
        "eval_success" => row.eval_success,
        "eval_abs_action" => row.eval_abs_action,
        "train_return" => row.train_return,
        "train_reported" => row.train_reported,
        "train_base" => row.train_base,
        "train_constraint" => row.train_constraint,
        "train_success" => row.train_success,
        "train_abs_action" => row.train_abs_action,
        "actor_fit" => row.actor_fit,
        "critic_loss" => row.critic_loss,
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub complete: bool,
    pub diverged: bool,
    pub iterations: u64,
    pub env_steps: u64,
    pub switch_iteration: Option<u64>,
    /// Evaluation rows inside the summary window.
    pub window_rows: usize,
    pub metrics: BTreeMap<String, Option<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub window_steps: u64,
    pub seeds: Vec<SeedSummary>,
    /// Over seeds that finished without diverging.
    pub aggregate: BTreeMap<String, Option<Aggregate>>,
    pub diverged: usize,
    pub incomplete: usize,
}

pub fn mean_std(values: &[f64]) -> Option<Aggregate> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Aggregate { mean, std, n })
}

/// Mean of each summary metric over rows in the final window.
pub fn summarize_rows(rows: &[MetricsRow], window_steps: u64) -> (usize, BTreeMap<String, Option<f64>>) {
    let last = rows.last().map_or(0, |r| r.env_steps);
    let cutoff = last.saturating_sub(window_steps);
    let in_window: Vec<&MetricsRow> = rows
        .iter()
        .filter(|r| r.env_steps > cutoff && r.eval_reported.is_some())
        .collect();
    let mut out = BTreeMap::new();
    for name in SUMMARY_METRICS {
        let vals: Vec<f64> = in_window.iter().filter_map(|r| metric_by_name(r, name)).collect();
        let m = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
        out.insert(name.to_string(), m);
    }
    (in_window.len(), out)
}

fn seed_of(dir_name: &str) -> Option<u64> {
    dir_name.strip_prefix("seed-")?.parse().ok()
}

/// Summarize every `seed-*` directory under `runs`.
pub fn summarize_runs(runs: &Path) -> Result<Summary> {
    let mut seeds = Vec::new();
    let entries = std::fs::read_dir(runs).map_err(|e| Error::io(runs, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(runs, e))?;
        let Some(seed) = entry.file_name().to_str().and_then(seed_of) else {
            continue;
        };
        let dir = entry.path();
        let metrics_path = dir.join(METRICS_FILE);
        if !metrics_path.exists() {
            continue;
        }
        let rows = read_metrics(&metrics_path)?;
        let status: Option<RunStatus> = match std::fs::read(dir.join(STATUS_FILE)) {
            Ok(bytes) => Some(serde_json::from_slice(&bytes)?),
            Err(_) => None,
        };
        let (window_rows, metrics) = summarize_rows(&rows, SUMMARY_WINDOW_STEPS);
        let last = rows.last();
        seeds.push(SeedSummary {
            seed,
            complete: status.is_some(),
            diverged: status.as_ref().is_some_and(|s| s.diverged),
            iterations: last.map_or(0, |r| r.iteration),
            env_steps: last.map_or(0, |r| r.env_steps),
            switch_iteration: status
                .as_ref()
                .map(|s| s.switch_iteration)
                .unwrap_or_else(|| rows.iter().find(|r| r.switched == 1).map(|r| r.iteration)),
            window_rows,
            metrics,
        });
    }
    if seeds.is_empty() {
        return Err(Error::config(format!("no seed-* runs with metrics under {}", runs.display())));
    }
    seeds.sort_by_key(|s| s.seed);
    let healthy: Vec<&SeedSummary> = seeds.iter().filter(|s| s.complete && !s.diverged).collect();
    let mut aggregate = BTreeMap::new();
    for name in SUMMARY_METRICS {
        let vals: Vec<f64> = healthy.iter().filter_map(|s| s.metrics[name]).collect();
        aggregate.insert(name.to_string(), mean_std(&vals));
    }
    Ok(Summary {
        window_steps: SUMMARY_WINDOW_STEPS,
        diverged: seeds.iter().filter(|s| s.diverged).count(),
        incomplete: seeds.iter().filter(|s| !s.complete).count(),
        seeds,
        aggregate,
    })
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(summary)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: u64, reported: Option<f64>) -> MetricsRow {
        MetricsRow {
            iteration: iter,
            env_steps: iter * 1000,
            eval_reported: reported,
            ..Default::default()
        }
    }

    #[test]
    fn window_keeps_final_stretch() {
        let rows: Vec<MetricsRow> = (1..=100)
            .map(|i| row(i, (i % 10 == 0).then_some(i as f64)))
            .collect();
        let (n, m) = summarize_rows(&rows, 50_000);
        // evaluations at 60, 70, 80, 90, 100
        assert_eq!(n, 5);
        assert_eq!(m["eval_reported"], Some(80.0));
        assert_eq!(m["eval_success"], None);
    }

    #[test]
    fn sample_std() {
        let a = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!(a.mean, 2.0);
        assert!((a.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]).unwrap().std, 0.0);
        assert!(mean_std(&[]).is_none());
    }
}
