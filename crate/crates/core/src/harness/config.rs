//! Run configuration: named presets deep-merged with a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, Exploration, ResetOnSwitch, SacConfig, SwitchMode, Td3Config, TrainerConfig};
use crate::env::robot::map::MapConfig;
use crate::env::robot::{BaseSubset, RobotConfig};
use crate::env::{EnvName, EnvSpec};
use crate::rl::DEFAULT_CAPACITY;
use crate::{Error, Result};

/// Environment variable naming the directory relative output paths live under.
pub const OUTPUT_ROOT_VAR: &str = "RC_OUTPUT_ROOT";

pub const PRESETS: [&str; 4] = ["classic-td3", "classic-sac", "robot-td3", "robot-sac"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSection {
    pub map: MapConfig,
    pub template: Option<usize>,
    pub progress_weight: f64,
    pub max_steps: usize,
}

impl Default for RobotSection {
    fn default() -> Self {
        let r = RobotConfig::default();
        Self {
            map: r.map,
            template: r.template,
            progress_weight: r.progress_weight,
            max_steps: r.max_steps,
        }
    }
}

/// One file fully determines a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub env: EnvName,
    pub agent: AgentKind,
    pub constraint_weight: f64,
    /// Overrides the learner's own discount when set.
    pub gamma: Option<f64>,
    pub threshold: f64,
    pub window: usize,
    pub total_steps: u64,
    pub steps_per_iteration: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub seeds: Vec<u64>,
    pub switch: SwitchMode,
    pub reset_on_switch: ResetOnSwitch,
    pub base_subset: BaseSubset,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub checkpoint_every: u64,
    pub output_dir: PathBuf,
    /// Explicit normalization bounds (G_min, G_max).
    pub bounds: Option<[f64; 2]>,
    pub exploration: Exploration,
    pub sac: SacConfig,
    pub td3: Td3Config,
    pub robot: RobotSection,
}

impl RunConfig {
    /// Paper constants for each named preset.
    pub fn preset(name: &str) -> Result<Self> {
        let classic = |agent: AgentKind, gamma: f64| RunConfig {
            preset: Some(name.to_string()),
            env: EnvName::PendulumSwingup,
            agent,
            constraint_weight: 1.0,
            gamma: Some(gamma),
            threshold: -50.0,
            window: 20,
            total_steps: 2_000_000,
            steps_per_iteration: 1000,
            batch_size: 128,
            buffer_capacity: DEFAULT_CAPACITY,
            seeds: vec![0, 1, 2, 3],
            switch: SwitchMode::Auto,
            reset_on_switch: ResetOnSwitch::None,
            base_subset: BaseSubset::Gp,
            eval_every: 10,
            eval_episodes: 5,
            checkpoint_every: 50,
            output_dir: PathBuf::from(format!("runs/{name}")),
            bounds: None,
            exploration: Exploration::default(),
            sac: SacConfig {
                gamma,
                ..SacConfig::default()
            },
            td3: Td3Config {
                gamma,
                ..Td3Config::default()
            },
            robot: RobotSection::default(),
        };
        let robot = |agent: AgentKind, threshold: f64| {
            let mut c = classic(agent, 0.99);
            c.env = EnvName::RobotNav;
            c.constraint_weight = 0.5;
            c.threshold = threshold;
            c.total_steps = 1_000_000;
            if !agent.is_sac() {
                c.exploration = Exploration {
                    sigma_start: 0.9,
                    sigma_end: 0.1,
                    anneal_fraction: 0.5,
                };
            }
            c
        };
        match name {
            "classic-td3" => Ok(classic(AgentKind::RcTd3, 0.999)),
            "classic-sac" => Ok(classic(AgentKind::RcSac, 0.99)),
            "robot-td3" => Ok(robot(AgentKind::RcTd3, -6.0)),
            "robot-sac" => Ok(robot(AgentKind::RcSac, -20.0)),
            _ => Err(Error::config(format!("unknown preset `{name}`; expected one of {}", PRESETS.join(", ")))),
        }
    }

    /// Parse TOML text. `preset` (default `classic-td3`) supplies every
    /// field the text leaves out; tables merge key by key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: toml::Table = toml::from_str(text).map_err(|e| Error::config(format!("invalid TOML: {e}")))?;
        let preset_name = match file.get("preset") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::config("`preset` must be a string")),
            None => "classic-td3".to_string(),
        };
        let base = toml::Table::try_from(Self::preset(&preset_name)?)
            .map_err(|e| Error::config(format!("preset serialization: {e}")))?;
        let merged = merge(base, file);
        let cfg: RunConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    pub fn env_spec(&self) -> EnvSpec {
        let r = &self.robot;
        EnvSpec {
            name: self.env,
            constraint_weight: self.constraint_weight,
            robot: RobotConfig {
                map: r.map.clone(),
                template: r.template,
                constraint_weight: self.constraint_weight,
                progress_weight: r.progress_weight,
                base_subset: self.base_subset,
                max_steps: r.max_steps,
            },
            bounds: self.bounds,
        }
    }

    pub fn trainer_config(&self) -> TrainerConfig {
        let mut sac = self.sac.clone();
        let mut td3 = self.td3.clone();
        if let Some(g) = self.gamma {
            sac.gamma = g;
            td3.gamma = g;
        }
        TrainerConfig {
            agent: self.agent,
            sac,
            td3,
            threshold: self.threshold,
            window: self.window,
            total_steps: self.total_steps,
            steps_per_iteration: self.steps_per_iteration,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            switch: self.switch,
            reset_on_switch: self.reset_on_switch,
            exploration: self.exploration,
            eval_every: self.eval_every,
            eval_episodes: self.eval_episodes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        if let Some(g) = self.gamma {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::config(format!("gamma {g} outside [0, 1)")));
            }
        }
        if !self.env.is_robot() && self.base_subset != BaseSubset::Gp {
            return Err(Error::config("base_subset only applies to the robot environment"));
        }
        self.trainer_config().validate()?;
        self.env_spec().validate()
    }

    /// `output_dir`, placed under `$RC_OUTPUT_ROOT` when it is relative.
    pub fn resolved_output_dir(&self) -> PathBuf {
        resolve_output(&self.output_dir)
    }
}

pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

/// Recursive table merge; `over` wins on conflicts.
fn merge(mut base: toml::Table, over: toml::Table) -> toml::Table {
    for (k, v) in over {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                base.insert(k, toml::Value::Table(merge(b, o)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}
