//! Classic control tasks with an action-magnitude constraint.
//!
//! Each task produces a base reward in [0, 1] and the constraint term
//! `r_c = -(1/d) * ||a||_1` in [-1, 0].

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{wrap_angle, EnvStep, Outcome};

/// Episode cap for the classic tasks. Reaching it is not terminal.
pub const CLASSIC_MAX_STEPS: usize = 1000;

/// `-(1/d) * ||a||_1`.
pub fn constraint_reward(action: &[f64], d: usize) -> f64 {
    -action.iter().map(|a| a.abs()).sum::<f64>() / d as f64
}

// ---------------------------------------------------------------- pendulum

pub const PENDULUM_DT: f64 = 0.05;
pub const PENDULUM_MAX_SPEED: f64 = 8.0;
const PENDULUM_G: f64 = 10.0;
const PENDULUM_MASS: f64 = 1.0;
const PENDULUM_LENGTH: f64 = 1.0;
const PENDULUM_MAX_TORQUE: f64 = 2.0;

/// Angle 0 is upright, wrapped to (-pi, pi].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub angle: f64,
    pub velocity: f64,
}

/// Semi-implicit Euler step. Returns the next state and the base reward
/// `(1 + cos angle) / 2` of that state.
pub fn pendulum_step(state: PendulumState, action: f64, dt: f64) -> (PendulumState, f64) {
    let torque = PENDULUM_MAX_TORQUE * action.clamp(-1.0, 1.0);
    let l = PENDULUM_LENGTH;
    let accel = 3.0 * PENDULUM_G / (2.0 * l) * state.angle.sin()
        + 3.0 / (PENDULUM_MASS * l * l) * torque;
    let velocity = (state.velocity + dt * accel).clamp(-PENDULUM_MAX_SPEED, PENDULUM_MAX_SPEED);
    let angle = wrap_angle(state.angle + dt * velocity);
    let next = PendulumState { angle, velocity };
    (next, pendulum_reward(&next))
}

pub fn pendulum_reward(s: &PendulumState) -> f64 {
    ((1.0 + s.angle.cos()) / 2.0).clamp(0.0, 1.0)
}

/// Mechanical energy with the upright position as zero potential.
pub fn pendulum_energy(s: &PendulumState) -> f64 {
    let inertia = PENDULUM_MASS * PENDULUM_LENGTH * PENDULUM_LENGTH / 3.0;
    0.5 * inertia * s.velocity * s.velocity
        + PENDULUM_MASS * PENDULUM_G * PENDULUM_LENGTH / 2.0 * (s.angle.cos() - 1.0)
}

// ---------------------------------------------------------------- cartpole

pub const CARTPOLE_DT: f64 = 0.02;
pub const TRACK_LIMIT: f64 = 2.4;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const POLE_HALF_LENGTH: f64 = 0.5;
const CARTPOLE_G: f64 = 9.8;
const FORCE_SCALE: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CartpoleMode {
    Balance,
    Swingup,
}

/// Pole angle 0 is upright, wrapped to (-pi, pi].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartpoleState {
    pub position: f64,
    pub velocity: f64,
    pub angle: f64,
    pub angular_velocity: f64,
}

pub fn cartpole_reward(s: &CartpoleState) -> f64 {
    s.angle.cos().max(0.0) * (1.0 - s.position.abs() / TRACK_LIMIT).max(0.0)
}

/// Cart-pole step. `done` is set only when the cart leaves the track.
pub fn cartpole_step(state: CartpoleState, action: f64, _mode: CartpoleMode, dt: f64) -> (CartpoleState, f64, bool) {
    let force = FORCE_SCALE * action.clamp(-1.0, 1.0);
    let total = CART_MASS + POLE_MASS;
    let (sin, cos) = state.angle.sin_cos();
    let pm_l = POLE_MASS * POLE_HALF_LENGTH;
    let temp = (force + pm_l * state.angular_velocity * state.angular_velocity * sin) / total;
    let ang_acc = (CARTPOLE_G * sin - cos * temp)
        / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total));
    let acc = temp - pm_l * ang_acc * cos / total;
    let velocity = state.velocity + dt * acc;
    let angular_velocity = state.angular_velocity + dt * ang_acc;
    let next = CartpoleState {
        position: state.position + dt * velocity,
        velocity,
        angle: wrap_angle(state.angle + dt * angular_velocity),
        angular_velocity,
    };
    let done = next.position.abs() > TRACK_LIMIT;
    (next, cartpole_reward(&next), done)
}

// ---------------------------------------------------------------- env

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassicTask {
    PendulumSwingup,
    CartpoleBalance,
    CartpoleSwingup,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ClassicState {
    Pendulum(PendulumState),
    Cartpole(CartpoleState),
}

/// A classic task wrapped with episode bookkeeping and the weighted reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicEnv {
    pub task: ClassicTask,
    pub constraint_weight: f64,
    pub max_steps: usize,
    pub state: ClassicState,
    pub steps: usize,
}

impl ClassicEnv {
    pub fn new(task: ClassicTask, constraint_weight: f64) -> Self {
        let state = match task {
            ClassicTask::PendulumSwingup => ClassicState::Pendulum(PendulumState {
                angle: PI,
                velocity: 0.0,
            }),
            _ => ClassicState::Cartpole(CartpoleState {
                position: 0.0,
                velocity: 0.0,
                angle: 0.0,
                angular_velocity: 0.0,
            }),
        };
        Self {
            task,
            constraint_weight,
            max_steps: CLASSIC_MAX_STEPS,
            state,
            steps: 0,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self.task {
            ClassicTask::PendulumSwingup => 3,
            _ => 5,
        }
    }

    pub fn act_dim(&self) -> usize {
        1
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        self.steps = 0;
        self.state = match self.task {
            ClassicTask::PendulumSwingup => {
                // uniform on (-pi, pi]
                let angle = PI - rng.random::<f64>() * 2.0 * PI;
                ClassicState::Pendulum(PendulumState { angle, velocity: 0.0 })
            }
            ClassicTask::CartpoleBalance => ClassicState::Cartpole(CartpoleState {
                position: rng.random_range(-0.05..=0.05),
                velocity: 0.0,
                angle: rng.random_range(-0.05..=0.05),
                angular_velocity: 0.0,
            }),
            ClassicTask::CartpoleSwingup => ClassicState::Cartpole(CartpoleState {
                position: rng.random_range(-0.05..=0.05),
                velocity: 0.0,
                angle: PI,
                angular_velocity: 0.0,
            }),
        };
        self.observe()
    }

    pub fn observe(&self) -> Vec<f64> {
        match self.state {
            ClassicState::Pendulum(s) => {
                vec![s.angle.cos(), s.angle.sin(), s.velocity / PENDULUM_MAX_SPEED]
            }
            ClassicState::Cartpole(s) => vec![
                s.position / TRACK_LIMIT,
                s.velocity,
                s.angle.cos(),
                s.angle.sin(),
                s.angular_velocity,
            ],
        }
    }

    /// Advance one step; returns both rewards and the termination flags.
    pub fn step(&mut self, action: &[f64]) -> EnvStep {
        let a = action[0].clamp(-1.0, 1.0);
        let (base, terminal) = match (self.task, &mut self.state) {
            (ClassicTask::PendulumSwingup, ClassicState::Pendulum(s)) => {
                let (next, rb) = pendulum_step(*s, a, PENDULUM_DT);
                *s = next;
                (rb, false)
            }
            (task, ClassicState::Cartpole(s)) => {
                let mode = if task == ClassicTask::CartpoleBalance {
                    CartpoleMode::Balance
                } else {
                    CartpoleMode::Swingup
                };
                let (next, rb, done) = cartpole_step(*s, a, mode, CARTPOLE_DT);
                *s = next;
                (rb, done)
            }
            _ => unreachable!("task and state always agree"),
        };
        self.steps += 1;
        let clipped = [a];
        let constraint = constraint_reward(&clipped, self.act_dim());
        let truncated = !terminal && self.steps >= self.max_steps;
        EnvStep {
            obs: self.observe(),
            base_reward: base,
            full_reward: base + self.constraint_weight * constraint,
            report_base: base,
            report_constraint: constraint,
            terminal,
            truncated,
            outcome: if terminal {
                Outcome::OutOfBounds
            } else if truncated {
                Outcome::Timeout
            } else {
                Outcome::Running
            },
        }
    }
}
