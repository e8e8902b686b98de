//! Versioned per-iteration metrics CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{EpisodeStats, IterationRecord};
use crate::{Error, Result};

pub const METRICS_VERSION_LINE: &str = "# rc-metrics v1";

pub const COLUMNS: [&str; 26] = [
    "iteration",
    "env_steps",
    "grad_steps",
    "phase",
    "switched",
    "critic_loss",
    "actor_fit",
    "alpha",
    "sigma",
    "train_episodes",
    "train_return",
    "train_reported",
    "train_base",
    "train_constraint",
    "train_success",
    "train_abs_action",
    "eval_return",
    "eval_reported",
    "eval_base",
    "eval_constraint",
    "eval_abs_action",
    "eval_success",
    "eval_goals",
    "eval_timeouts",
    "eval_collisions",
    "eval_normalized",
];

/// One parsed metrics row. Empty cells read back as `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: u64,
    pub env_steps: u64,
    pub grad_steps: u64,
    pub phase: u8,
    pub switched: u8,
    pub critic_loss: Option<f64>,
    pub actor_fit: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub train_episodes: u64,
    pub train_return: Option<f64>,
    pub train_reported: Option<f64>,
    pub train_base: Option<f64>,
    pub train_constraint: Option<f64>,
    pub train_success: Option<f64>,
    pub train_abs_action: Option<f64>,
    pub eval_return: Option<f64>,
    pub eval_reported: Option<f64>,
    pub eval_base: Option<f64>,
    pub eval_constraint: Option<f64>,
    pub eval_abs_action: Option<f64>,
    pub eval_success: Option<f64>,
    pub eval_goals: Option<u64>,
    pub eval_timeouts: Option<u64>,
    pub eval_collisions: Option<u64>,
    pub eval_normalized: Option<f64>,
}

/// Nine significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.8e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Cells for one iteration, in `COLUMNS` order.
pub fn record_cells(r: &IterationRecord) -> Vec<String> {
    let mut cells = vec![
        r.iteration.to_string(),
        r.env_steps.to_string(),
        r.grad_steps.to_string(),
        r.phase.index().to_string(),
        u8::from(r.switched).to_string(),
        opt(r.critic_loss),
        opt(r.actor_fit),
        opt(r.alpha),
        opt(r.sigma),
    ];
    let t = r.train.as_ref();
    cells.push(t.map_or(0, |t| t.episodes).to_string());
    let tf = |f: fn(&EpisodeStats) -> f64| opt(t.map(f));
    cells.extend([
        tf(|s| s.train_return),
        tf(|s| s.reported),
        tf(|s| s.base),
        tf(|s| s.constraint),
        tf(|s| s.success_rate),
        tf(|s| s.mean_abs_action),
    ]);
    let e = r.eval.as_ref();
    let ef = |f: fn(&EpisodeStats) -> f64| opt(e.map(f));
    let ec = |f: fn(&EpisodeStats) -> usize| e.map(|s| f(s).to_string()).unwrap_or_default();
    cells.extend([
        ef(|s| s.train_return),
        ef(|s| s.reported),
        ef(|s| s.base),
        ef(|s| s.constraint),
        ef(|s| s.mean_abs_action),
        ef(|s| s.success_rate),
        ec(|s| s.goals),
        ec(|s| s.timeouts),
        ec(|s| s.collisions),
        ef(|s| s.normalized),
    ]);
    debug_assert_eq!(cells.len(), COLUMNS.len());
    cells
}

pub struct MetricsWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl MetricsWriter {
    /// Start a new file with the version line and header.
    pub fn create(path: &Path) -> Result<Self> {
        let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        writeln!(f, "{METRICS_VERSION_LINE}").map_err(|e| Error::io(path, e))?;
        let mut inner = csv::Writer::from_writer(f);
        inner.write_record(COLUMNS)?;
        inner.flush().map_err(|e| Error::io(path, e))?;
        Ok(Self { inner })
    }

    /// Reopen an existing file, keeping only rows up to `iteration`, so a
    /// resumed run continues where its checkpoint was taken.
    pub fn resume(path: &Path, iteration: u64) -> Result<Self> {
        let rows = read_metrics(path)?;
        let mut w = Self::create(path)?;
        for row in rows.iter().filter(|r| r.iteration <= iteration) {
            w.inner.write_record(row_cells(row))?;
        }
        w.inner.flush().map_err(|e| Error::io(path, e))?;
        Ok(w)
    }

    pub fn write(&mut self, r: &IterationRecord) -> Result<()> {
        self.inner.write_record(record_cells(r))?;
        self.inner.flush().map_err(|e| Error::io("metrics", e))
    }
}

/// Cells of a parsed row, re-emitted with the writer's float formatting.
fn row_cells(row: &MetricsRow) -> Vec<String> {
    let o = |v: Option<f64>| opt(v);
    let c = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        row.iteration.to_string(),
        row.env_steps.to_string(),
        row.grad_steps.to_string(),
        row.phase.to_string(),
        row.switched.to_string(),
        o(row.critic_loss),
        o(row.actor_fit),
        o(row.alpha),
        o(row.sigma),
        row.train_episodes.to_string(),
        o(row.train_return),
        o(row.train_reported),
        o(row.train_base),
        o(row.train_constraint),
        o(row.train_success),
        o(row.train_abs_action),
        o(row.eval_return),
        o(row.eval_reported),
        o(row.eval_base),
        o(row.eval_constraint),
        o(row.eval_abs_action),
        o(row.eval_success),
        c(row.eval_goals),
        c(row.eval_timeouts),
        c(row.eval_collisions),
        o(row.eval_normalized),
    ]
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(f);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    if first.trim_end() != METRICS_VERSION_LINE {
        return Err(Error::config(format!("{} is not a v1 metrics file", path.display())));
    }
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(Error::config(format!("{} has an unexpected header", path.display())));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}
