//! Environments: classic control analogs and robot navigation.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod classic;
pub mod robot;

pub use classic::{ClassicEnv, ClassicTask};
pub use robot::{RobotConfig, RobotEnv};

/// Map an angle into (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let a = (x + PI).rem_euclid(TAU) - PI;
    if a <= -PI {
        PI
    } else {
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Running,
    Goal,
    Timeout,
    Collision,
    OutOfBounds,
}

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvStep {
    pub obs: Vec<f64>,
    /// Reward optimized in the base phase.
    pub base_reward: f64,
    /// Reward optimized in the full phase.
    pub full_reward: f64,
    /// Task part of the reward, independent of any weights or subsets.
    pub report_base: f64,
    /// Unweighted constraint part, recombined at reporting time.
    pub report_constraint: f64,
    pub terminal: bool,
    pub truncated: bool,
    pub outcome: Outcome,
}

impl EnvStep {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    PendulumSwingup,
    CartpoleBalance,
    CartpoleSwingup,
    RobotNav,
}

impl EnvName {
    pub const ALL: [EnvName; 4] = [
        EnvName::PendulumSwingup,
        EnvName::CartpoleBalance,
        EnvName::CartpoleSwingup,
        EnvName::RobotNav,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvName::PendulumSwingup => "pendulum_swingup",
            EnvName::CartpoleBalance => "cartpole_balance",
            EnvName::CartpoleSwingup => "cartpole_swingup",
            EnvName::RobotNav => "robot_nav",
        }
    }

    pub fn parse(s: &str) -> crate::Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| crate::Error::config(format!("unknown environment `{s}`")))
    }

    pub fn is_robot(self) -> bool {
        self == EnvName::RobotNav
    }

    /// Constraint weight used when reporting returns.
    pub fn report_weight(self) -> f64 {
        if self.is_robot() {
            0.1
        } else {
            1.0
        }
    }
}

/// Everything needed to build an environment instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvSpec {
    pub name: EnvName,
    pub constraint_weight: f64,
    /// Robot-only settings; `constraint_weight` above takes precedence.
    pub robot: RobotConfig,
    /// Explicit (G_min, G_max) for normalization instead of the built-in table.
    pub bounds: Option<[f64; 2]>,
}

impl Default for EnvSpec {
    fn default() -> Self {
        Self {
            name: EnvName::PendulumSwingup,
            constraint_weight: 1.0,
            robot: RobotConfig::default(),
            bounds: None,
        }
    }
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.return_bounds();
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::config(format!("degenerate return bounds ({lo}, {hi})")));
        }
        if !self.constraint_weight.is_finite() || self.constraint_weight < 0.0 {
            return Err(Error::config("constraint_weight must be finite and non-negative"));
        }
        if self.name.is_robot() {
            let r = &self.robot;
            if r.max_steps == 0 {
                return Err(Error::config("robot.max_steps must be positive"));
            }
            if let Some(t) = r.template {
                if t >= robot::map::TEMPLATE_COUNT {
                    return Err(Error::config(format!("robot.template {t} out of range")));
                }
            }
            if r.map.templates.iter().any(|&t| t >= robot::map::TEMPLATE_COUNT) {
                return Err(Error::config("robot.map.templates has an unknown template"));
            }
            let (lo, hi) = r.map.start_goal_distance;
            if !(lo >= 0.0 && lo <= hi) {
                return Err(Error::config("robot.map.start_goal_distance must satisfy 0 <= lo <= hi"));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Env {
        match self.name {
            EnvName::PendulumSwingup => Env::Classic(ClassicEnv::new(ClassicTask::PendulumSwingup, self.constraint_weight)),
            EnvName::CartpoleBalance => Env::Classic(ClassicEnv::new(ClassicTask::CartpoleBalance, self.constraint_weight)),
            EnvName::CartpoleSwingup => Env::Classic(ClassicEnv::new(ClassicTask::CartpoleSwingup, self.constraint_weight)),
            EnvName::RobotNav => {
                let mut cfg = self.robot.clone();
                cfg.constraint_weight = self.constraint_weight;
                Env::Robot(Box::new(RobotEnv::new(cfg)))
            }
        }
    }

    pub fn max_steps(&self) -> usize {
        if self.name.is_robot() {
            self.robot.max_steps
        } else {
            classic::CLASSIC_MAX_STEPS
        }
    }

    /// (G_min, G_max) of a reported episode return.
    pub fn return_bounds(&self) -> (f64, f64) {
        if let Some([lo, hi]) = self.bounds {
            return (lo, hi);
        }
        let n = self.max_steps() as f64;
        let w = self.name.report_weight();
        if self.name.is_robot() {
            let per_step = self.robot.progress_weight + 3.0 * w;
            (-n * per_step, robot::reward::GOAL_BONUS + n * per_step)
        } else {
            (-n * w, n)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Env {
    Classic(ClassicEnv),
    Robot(Box<RobotEnv>),
}

impl Env {
    pub fn obs_dim(&self) -> usize {
        match self {
            Env::Classic(e) => e.obs_dim(),
            Env::Robot(e) => e.obs_dim(),
        }
    }

    pub fn act_dim(&self) -> usize {
        match self {
            Env::Classic(e) => e.act_dim(),
            Env::Robot(e) => e.act_dim(),
        }
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Env::Classic(e) => Ok(e.reset(rng)),
            Env::Robot(e) => e.reset(rng),
        }
    }

    pub fn observe(&self) -> Vec<f64> {
        match self {
            Env::Classic(e) => e.observe(),
            Env::Robot(e) => e.observe(),
        }
    }

    pub fn step(&mut self, action: &[f64]) -> EnvStep {
        match self {
            Env::Classic(e) => e.step(action),
            Env::Robot(e) => e.step(action),
        }
    }
}
