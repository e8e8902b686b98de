//! Dual-reward replay buffer.
//!
//! Every transition keeps both its base reward and its full reward. Batches
//! are relabeled at sampling time according to the curriculum phase, so
//! experience gathered while optimising the base reward is reused once the
//! full reward takes over.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default capacity of the replay memory.
pub const DEFAULT_CAPACITY: usize = 1_000_000;

/// Curriculum phase. Only ever moves from `Base` to `Full`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Base = 0,
    Full = 1,
}

impl Phase {
    pub fn index(self) -> u8 {
        self as u8
    }
}

/// One environment step with both rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub base_reward: f64,
    pub full_reward: f64,
    pub next_state: Vec<f64>,
    /// True only for genuine termination; time-limit truncation is `false`.
    pub terminal: bool,
}

/// The reward a learner sees in a given phase.
pub fn select_curriculum_reward(t: &Transition, phase: Phase) -> f64 {
    pick(t.base_reward, t.full_reward, phase)
}

#[inline]
fn pick(base: f64, full: f64, phase: Phase) -> f64 {
    match phase {
        Phase::Base => base,
        Phase::Full => full,
    }
}

/// A sampled minibatch with curriculum rewards already chosen.
#[derive(Clone, Debug)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
    pub terminals: Vec<bool>,
    /// Buffer slots the rows came from, for auditing.
    pub indices: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Fixed-capacity ring of transitions stored column-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    act_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    base: Vec<f64>,
    full: Vec<f64>,
    next_states: Vec<f64>,
    terminals: Vec<bool>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Result<Self> {
        if capacity == 0 || obs_dim == 0 || act_dim == 0 {
            return Err(Error::config("replay buffer dimensions must be positive"));
        }
        Ok(Self {
            capacity,
            obs_dim,
            act_dim,
            states: Vec::new(),
            actions: Vec::new(),
            base: Vec::new(),
            full: Vec::new(),
            next_states: Vec::new(),
            terminals: Vec::new(),
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Slot the next push writes to.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn clear(&mut self) {
        self.states.clear();
        self.actions.clear();
        self.base.clear();
        self.full.clear();
        self.next_states.clear();
        self.terminals.clear();
        self.cursor = 0;
    }

    pub fn push(&mut self, t: &Transition) -> Result<()> {
        if t.state.len() != self.obs_dim
            || t.next_state.len() != self.obs_dim
            || t.action.len() != self.act_dim
        {
            return Err(Error::config(format!(
                "transition dims ({}, {}, {}) do not match buffer ({}, {})",
                t.state.len(),
                t.action.len(),
                t.next_state.len(),
                self.obs_dim,
                self.act_dim
            )));
        }
        if self.len() < self.capacity {
            self.states.extend_from_slice(&t.state);
            self.actions.extend_from_slice(&t.action);
            self.base.push(t.base_reward);
            self.full.push(t.full_reward);
            self.next_states.extend_from_slice(&t.next_state);
            self.terminals.push(t.terminal);
        } else {
            let i = self.cursor;
            let (o, a) = (self.obs_dim, self.act_dim);
            self.states[i * o..(i + 1) * o].copy_from_slice(&t.state);
            self.actions[i * a..(i + 1) * a].copy_from_slice(&t.action);
            self.base[i] = t.base_reward;
            self.full[i] = t.full_reward;
            self.next_states[i * o..(i + 1) * o].copy_from_slice(&t.next_state);
            self.terminals[i] = t.terminal;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len() {
            return None;
        }
        let (o, a) = (self.obs_dim, self.act_dim);
        Some(Transition {
            state: self.states[i * o..(i + 1) * o].to_vec(),
            action: self.actions[i * a..(i + 1) * a].to_vec(),
            base_reward: self.base[i],
            full_reward: self.full[i],
            next_state: self.next_states[i * o..(i + 1) * o].to_vec(),
            terminal: self.terminals[i],
        })
    }

    /// Stored transitions from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = Transition> + '_ {
        let start = if self.len() < self.capacity { 0 } else { self.cursor };
        (0..self.len()).map(move |k| self.get((start + k) % self.len()).expect("in range"))
    }

    /// Uniform sampling with replacement, rewards relabeled for `phase`.
    /// Returns `None` while the buffer holds fewer than `batch_size` items.
    pub fn sample_batch<R: Rng + ?Sized>(&self, phase: Phase, batch_size: usize, rng: &mut R) -> Option<Batch> {
        if batch_size == 0 || self.len() < batch_size {
            return None;
        }
        let indices: Vec<usize> = (0..batch_size).map(|_| rng.random_range(0..self.len())).collect();
        Some(self.gather(&indices, phase))
    }

    pub fn gather(&self, indices: &[usize], phase: Phase) -> Batch {
        let (o, a) = (self.obs_dim, self.act_dim);
        let n = indices.len();
        let mut states = Vec::with_capacity(n * o);
        let mut actions = Vec::with_capacity(n * a);
        let mut next_states = Vec::with_capacity(n * o);
        let mut rewards = Vec::with_capacity(n);
        let mut terminals = Vec::with_capacity(n);
        for &i in indices {
            states.extend_from_slice(&self.states[i * o..(i + 1) * o]);
            actions.extend_from_slice(&self.actions[i * a..(i + 1) * a]);
            next_states.extend_from_slice(&self.next_states[i * o..(i + 1) * o]);
            rewards.push(pick(self.base[i], self.full[i], phase));
            terminals.push(self.terminals[i]);
        }
        Batch {
            states: Array2::from_shape_vec((n, o), states).expect("sized above"),
            actions: Array2::from_shape_vec((n, a), actions).expect("sized above"),
            rewards,
            next_states: Array2::from_shape_vec((n, o), next_states).expect("sized above"),
            terminals,
            indices: indices.to_vec(),
        }
    }

    /// Raw columns, for checkpointing.
    pub fn columns(&self) -> BufferColumns<'_> {
        BufferColumns {
            states: &self.states,
            actions: &self.actions,
            base: &self.base,
            full: &self.full,
            next_states: &self.next_states,
            terminals: &self.terminals,
            cursor: self.cursor,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_columns(
        capacity: usize,
        obs_dim: usize,
        act_dim: usize,
        states: Vec<f64>,
        actions: Vec<f64>,
        base: Vec<f64>,
        full: Vec<f64>,
        next_states: Vec<f64>,
        terminals: Vec<bool>,
        cursor: usize,
    ) -> Result<Self> {
        let n = base.len();
        let ok = n <= capacity
            && full.len() == n
            && terminals.len() == n
            && states.len() == n * obs_dim
            && next_states.len() == n * obs_dim
            && actions.len() == n * act_dim
            && cursor < capacity;
        if !ok {
            return Err(Error::Checkpoint("inconsistent replay buffer columns".into()));
        }
        Ok(Self {
            capacity,
            obs_dim,
            act_dim,
            states,
            actions,
            base,
            full,
            next_states,
            terminals,
            cursor,
        })
    }
}

pub struct BufferColumns<'a> {
    pub states: &'a [f64],
    pub actions: &'a [f64],
    pub base: &'a [f64],
    pub full: &'a [f64],
    pub next_states: &'a [f64],
    pub terminals: &'a [bool],
    pub cursor: usize,
}
