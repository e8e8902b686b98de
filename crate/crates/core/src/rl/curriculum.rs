//! Automatic phase switch driven by how well the actor fits its critic.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::rl::buffer::Phase;

/// Decides when the curriculum leaves the base-reward phase.
///
/// One actor-fit value is recorded per training iteration. The switch fires
/// the first time the last `window` recorded values are all strictly below
/// `threshold`, and the phase never returns to `Base`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurriculumController {
    phase: Phase,
    threshold: f64,
    window: usize,
    recent: VecDeque<f64>,
    recorded: u64,
    switched_at: Option<u64>,
}

/// Mutable controller state, as stored in checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub phase: Phase,
    pub recent: Vec<f64>,
    pub recorded: u64,
    pub switched_at: Option<u64>,
}

impl CurriculumController {
    pub fn new(threshold: f64, window: usize) -> Self {
        Self {
            phase: Phase::Base,
            threshold,
            window: window.max(1),
            recent: VecDeque::with_capacity(window.max(1)),
            recorded: 0,
            switched_at: None,
        }
    }

    /// Controller for a baseline learner: full reward from the start.
    pub fn pinned_full() -> Self {
        let mut c = Self::new(f64::NEG_INFINITY, 1);
        c.phase = Phase::Full;
        c
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of fit values recorded so far.
    pub fn recorded(&self) -> u64 {
        self.recorded
    }

    /// 1-based index of the recorded value that triggered the switch.
    pub fn switched_at(&self) -> Option<u64> {
        self.switched_at
    }

    pub fn recent(&self) -> impl Iterator<Item = f64> + '_ {
        self.recent.iter().copied()
    }

    /// Append one iteration's fit value; returns true exactly when this call
    /// moved the phase from `Base` to `Full`.
    pub fn record_actor_fit(&mut self, value: f64) -> bool {
        self.recorded += 1;
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(value);
        if self.phase == Phase::Full {
            return false;
        }
        let fits = self.recent.len() == self.window && self.recent.iter().all(|&j| j < self.threshold);
        if fits {
            self.switch_now();
        }
        fits
    }

    /// Record that no fit value was available this iteration (for example
    /// while the buffer is still warming up). Breaks any running window.
    pub fn record_gap(&mut self) {
        self.recorded += 1;
        self.recent.clear();
    }

    /// Unconditional switch, used by fixed-time schedules.
    pub fn force_switch(&mut self) -> bool {
        if self.phase == Phase::Full {
            return false;
        }
        self.switch_now();
        true
    }

    fn switch_now(&mut self) {
        self.phase = Phase::Full;
        self.switched_at = Some(self.recorded);
    }

    pub fn state(&self) -> ControllerState {
        ControllerState {
            phase: self.phase,
            recent: self.recent.iter().copied().collect(),
            recorded: self.recorded,
            switched_at: self.switched_at,
        }
    }

    pub fn restore(&mut self, state: &ControllerState) {
        self.phase = state.phase;
        self.recent = state.recent.iter().copied().collect();
        while self.recent.len() > self.window {
            self.recent.pop_front();
        }
        self.recorded = state.recorded;
        self.switched_at = state.switched_at;
    }
}
