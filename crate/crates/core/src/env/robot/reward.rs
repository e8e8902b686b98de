//! Navigation reward terms and their composition.

use serde::{Deserialize, Serialize};

use crate::env::robot::dynamics::{DT, V_MAX};
use crate::Error;

pub const KAPPA: f64 = 0.942;
pub const V_REF: f64 = 1.2;
pub const TRACK_MAX: f64 = 5.0;
pub const GOAL_BONUS: f64 = 100.0;
pub const PROGRESS_WEIGHT: f64 = 0.25;

/// Asymmetric quadratic: weight `kappa` above zero, `1 - kappa` below.
pub fn asym_sq(x: f64, kappa: f64) -> f64 {
    if x > 0.0 {
        kappa * x * x
    } else {
        (1.0 - kappa) * x * x
    }
}

pub fn goal_reward(reached: bool) -> f64 {
    if reached {
        GOAL_BONUS
    } else {
        0.0
    }
}

pub fn action_reward(action: &[f64]) -> f64 {
    1.0 - action.iter().map(|a| a.abs()).sum::<f64>()
}

pub fn velocity_reward(v: f64) -> f64 {
    let denom = asym_sq(-V_REF, KAPPA).max(asym_sq(V_MAX - V_REF, KAPPA));
    1.0 - 2.0 * asym_sq(v - V_REF, KAPPA) / denom
}

pub fn tracking_reward(d_track: f64) -> f64 {
    1.0 - 2.0 * (d_track.abs() / TRACK_MAX).min(1.0)
}

/// Path progress over one step, normalized by the largest possible advance.
pub fn progress_reward(progress_before: f64, progress_after: f64) -> f64 {
    ((progress_after - progress_before) / (V_MAX * DT)).clamp(-1.0, 1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    pub goal: f64,
    pub action: f64,
    pub velocity: f64,
    pub tracking: f64,
    pub progress: f64,
}

impl RewardTerms {
    pub fn constraint_sum(&self) -> f64 {
        self.velocity + self.action + self.tracking
    }
}

/// Which constraint terms are folded into the base reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseSubset {
    #[default]
    Gp,
    Gpv,
    Gpa,
    Gpx,
    Full,
}

impl BaseSubset {
    pub const ALL: [BaseSubset; 5] = [Self::Gp, Self::Gpv, Self::Gpa, Self::Gpx, Self::Full];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gp => "gp",
            Self::Gpv => "gpv",
            Self::Gpa => "gpa",
            Self::Gpx => "gpx",
            Self::Full => "full",
        }
    }

    pub fn parse(s: &str) -> crate::Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::config(format!("unknown base subset `{s}`")))
    }

    /// (velocity, action, tracking) membership.
    pub fn includes(self) -> (bool, bool, bool) {
        match self {
            Self::Gp => (false, false, false),
            Self::Gpv => (true, false, false),
            Self::Gpa => (false, true, false),
            Self::Gpx => (false, false, true),
            Self::Full => (true, true, true),
        }
    }
}

/// (r_b, r). Constraint terms selected by `subset` enter r_b with weight
/// `w_c`; the full reward is the same for every subset.
pub fn compose_reward(t: &RewardTerms, w_p: f64, w_c: f64, subset: BaseSubset) -> (f64, f64) {
    let full = t.goal + w_p * t.progress + w_c * t.constraint_sum();
    let (v, a, x) = subset.includes();
    let mut base = t.goal + w_p * t.progress;
    if v {
        base += w_c * t.velocity;
    }
    if a {
        base += w_c * t.action;
    }
    if x {
        base += w_c * t.tracking;
    }
    (base, full)
}
