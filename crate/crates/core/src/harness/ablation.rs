//! Matched ablation runs: resets on switch, static switch times and
//! base-reward subsets, each compared against a reference arm.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{ResetOnSwitch, SwitchMode};
use crate::env::robot::BaseSubset;
use crate::harness::config::RunConfig;
use crate::harness::metrics::{fmt_f64, read_metrics};
use crate::harness::runner::{run_experiment, seed_dir, METRICS_FILE};
use crate::harness::summary::{metric_by_name, Summary};
use crate::{Error, Result};

pub const SMOOTHING_WINDOW: usize = 50;

/// Columns smoothed in the comparison file.
pub const SMOOTHED: [&str; 4] = ["train_reported", "eval_reported", "eval_success", "actor_fit"];

#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    ResetNetworks,
    ResetBuffer,
    StaticSwitch(SwitchMode),
    /// `None` runs the whole subset grid.
    BaseSubset(Option<BaseSubset>),
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "reset-networks" => Ok(Variant::ResetNetworks),
            "reset-buffer" => Ok(Variant::ResetBuffer),
            "base-subset" => Ok(Variant::BaseSubset(None)),
            _ => {
                if let Some(frac) = s.strip_prefix("static-switch:") {
                    return Ok(Variant::StaticSwitch(SwitchMode::parse(&format!("static:{frac}"))?));
                }
                if let Some(id) = s.strip_prefix("base-subset:") {
                    return Ok(Variant::BaseSubset(Some(BaseSubset::parse(id)?)));
                }
                Err(Error::config(format!(
                    "unknown ablation variant `{s}`; expected reset-networks, reset-buffer, \
                     static-switch:<a/b> or base-subset[:<id>]"
                )))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Variant::ResetNetworks => "reset-networks".into(),
            Variant::ResetBuffer => "reset-buffer".into(),
            Variant::StaticSwitch(SwitchMode::Static { num, den }) => format!("static-switch-{num}-{den}"),
            Variant::StaticSwitch(_) => "static-switch".into(),
            Variant::BaseSubset(None) => "base-subset".into(),
            Variant::BaseSubset(Some(b)) => format!("base-subset-{}", b.name()),
        }
    }

    /// Named configurations to run; the reference arm comes first.
    pub fn arms(&self, base: &RunConfig) -> Result<Vec<(String, RunConfig)>> {
        if !base.agent.is_curriculum() {
            return Err(Error::config(format!(
                "ablation `{}` needs a curriculum agent, config has `{}`",
                self.label(),
                base.agent.name()
            )));
        }
        let mut reference = base.clone();
        reference.reset_on_switch = ResetOnSwitch::None;
        let with = |f: &dyn Fn(&mut RunConfig)| {
            let mut c = reference.clone();
            f(&mut c);
            c
        };
        Ok(match self {
            Variant::ResetNetworks => vec![
                ("reference".into(), reference.clone()),
                ("reset-networks".into(), with(&|c| c.reset_on_switch = ResetOnSwitch::Networks)),
            ],
            Variant::ResetBuffer => vec![
                ("reference".into(), reference.clone()),
                ("reset-buffer".into(), with(&|c| c.reset_on_switch = ResetOnSwitch::Buffer)),
            ],
            Variant::StaticSwitch(mode) => {
                let mode = *mode;
                vec![
                    ("auto".into(), with(&|c| c.switch = SwitchMode::Auto)),
                    (mode.label().replace([':', '/'], "-"), with(&move |c| c.switch = mode)),
                ]
            }
            Variant::BaseSubset(which) => {
                if !base.env.is_robot() {
                    return Err(Error::config("base-subset ablation needs the robot environment"));
                }
                let subsets: Vec<BaseSubset> = match which {
                    None => BaseSubset::ALL.to_vec(),
                    Some(BaseSubset::Gp) => vec![BaseSubset::Gp],
                    Some(b) => vec![BaseSubset::Gp, *b],
                };
                subsets
                    .into_iter()
                    .map(|b| (b.name().to_string(), with(&move |c| c.base_subset = b)))
                    .collect()
            }
        })
    }
}

/// Trailing mean over the last `window` entries, ignoring gaps.
pub fn running_average(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let window = window.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let present: Vec<f64> = values[lo..=i].iter().flatten().copied().collect();
            (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub arm: String,
    pub dir: PathBuf,
    pub summary: Summary,
}

/// Run every arm with the shared seed list and write `comparison.csv` and
/// `switches.csv` under `out`.
pub fn run_ablation(base: &RunConfig, variant: &Variant, out: &Path) -> Result<Vec<ArmResult>> {
    base.validate()?;
    let arms = variant.arms(base)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut results = Vec::new();
    for (name, cfg) in &arms {
        let dir = out.join(name);
        let summary = run_experiment(cfg, &dir)?;
        results.push(ArmResult {
            arm: name.clone(),
            dir,
            summary,
        });
    }
    write_comparison(&results, &out.join("comparison.csv"))?;
    write_switches(&results, base.steps_per_iteration, &out.join("switches.csv"))?;
    Ok(results)
}

pub fn write_comparison(arms: &[ArmResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["arm".to_string(), "seed".into(), "iteration".into(), "env_steps".into(), "phase".into()];
    for c in SMOOTHED {
        header.push(c.to_string());
        header.push(format!("{c}_smoothed"));
    }
    w.write_record(&header)?;
    for arm in arms {
        for s in &arm.summary.seeds {
            let rows = read_metrics(&seed_dir(&arm.dir, s.seed).join(METRICS_FILE))?;
            let smoothed: Vec<Vec<Option<f64>>> = SMOOTHED
                .iter()
                .map(|c| {
                    let raw: Vec<Option<f64>> = rows.iter().map(|r| metric_by_name(r, c)).collect();
                    running_average(&raw, SMOOTHING_WINDOW)
                })
                .collect();
            for (i, r) in rows.iter().enumerate() {
                let mut rec = vec![
                    arm.arm.clone(),
                    s.seed.to_string(),
                    r.iteration.to_string(),
                    r.env_steps.to_string(),
                    r.phase.to_string(),
                ];
                for (k, c) in SMOOTHED.iter().enumerate() {
                    rec.push(metric_by_name(r, c).map(fmt_f64).unwrap_or_default());
                    rec.push(smoothed[k][i].map(fmt_f64).unwrap_or_default());
                }
                w.write_record(&rec)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_switches(arms: &[ArmResult], steps_per_iteration: u64, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "arm,seed,switch_iteration,switch_env_steps,diverged").map_err(|e| Error::io(path, e))?;
    for arm in arms {
        for s in &arm.summary.seeds {
            let (it, steps) = match s.switch_iteration {
                Some(i) => (i.to_string(), (i * steps_per_iteration).to_string()),
                None => (String::new(), String::new()),
            };
            writeln!(f, "{},{},{},{},{}", arm.arm, s.seed, it, steps, u8::from(s.diverged))
                .map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}
