//! The navigation episode: map, reference path, robot, sensing and reward.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::robot::dynamics::{robot_step, RobotState, DT, OMEGA_MAX, V_MAX};
use crate::env::robot::geometry::{dist, sub, to_local, Vec2};
use crate::env::robot::lidar::{scan, BEAMS, MAX_RANGE};
use crate::env::robot::map::{advance_obstacles, cell_center, generate_map, MapConfig, WorldMap, ROBOT_RADIUS, WORKSPACE};
use crate::env::robot::path::ReferencePath;
use crate::env::robot::reward::{
    action_reward, compose_reward, goal_reward, progress_reward, tracking_reward, velocity_reward, BaseSubset,
    RewardTerms, PROGRESS_WEIGHT,
};
use crate::env::{EnvStep, Outcome};
use crate::Result;

pub const OBS_DIM: usize = 178;
pub const ACT_DIM: usize = 2;
pub const LOOKAHEAD: usize = 14;
pub const LOOKAHEAD_SPACING: f64 = 0.5;
pub const GOAL_RADIUS: f64 = 0.5;
pub const ROBOT_MAX_STEPS: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotConfig {
    pub map: MapConfig,
    /// Pin every episode to one template.
    pub template: Option<usize>,
    pub constraint_weight: f64,
    pub progress_weight: f64,
    pub base_subset: BaseSubset,
    pub max_steps: usize,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            map: MapConfig::default(),
            template: None,
            constraint_weight: 0.1,
            progress_weight: PROGRESS_WEIGHT,
            base_subset: BaseSubset::Gp,
            max_steps: ROBOT_MAX_STEPS,
        }
    }
}

/// Per-step record for trajectory dumps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub omega: f64,
    pub terms: RewardTerms,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotEnv {
    pub config: RobotConfig,
    pub map: WorldMap,
    pub path: ReferencePath,
    pub goal: Vec2,
    pub state: RobotState,
    pub progress: f64,
    pub prev_scan: Vec<f64>,
    pub scan: Vec<f64>,
    pub steps: usize,
    pub last_terms: RewardTerms,
}

impl RobotEnv {
    /// An env with an empty placeholder scenario; call `reset` before use.
    pub fn new(config: RobotConfig) -> Self {
        let map = WorldMap {
            template: 0,
            size: [WORKSPACE, WORKSPACE],
            permanent: vec![],
            temporary: vec![],
        };
        let centre = [WORKSPACE / 2.0, WORKSPACE / 2.0];
        Self::from_scenario(config, map, ReferencePath::new(vec![centre]), centre, 0.0)
    }

    /// Place the robot at rest at the start of `path`, facing `heading`.
    pub fn from_scenario(config: RobotConfig, map: WorldMap, path: ReferencePath, goal: Vec2, heading: f64) -> Self {
        let start = path.points()[0];
        let mut env = Self {
            config,
            map,
            path,
            goal,
            state: RobotState {
                position: start,
                heading,
                speed: 0.0,
                omega: 0.0,
            },
            progress: 0.0,
            prev_scan: vec![],
            scan: vec![],
            steps: 0,
            last_terms: RewardTerms::default(),
        };
        env.progress = env.path.project(start).progress;
        env.scan = env.normalized_scan();
        env.prev_scan = env.scan.clone();
        env
    }

    pub fn obs_dim(&self) -> usize {
        OBS_DIM
    }

    pub fn act_dim(&self) -> usize {
        ACT_DIM
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let sc = generate_map(rng, self.config.template, &self.config.map)?;
        let mut points: Vec<Vec2> = sc.cells.iter().map(|&c| cell_center(c)).collect();
        points[0] = sc.start;
        *points.last_mut().expect("non-empty") = sc.goal;
        let path = ReferencePath::simplified(points);
        let ahead = path.point_at(1.0);
        let d = sub(ahead, sc.start);
        let base = if d == [0.0, 0.0] { 0.0 } else { d[1].atan2(d[0]) };
        let heading = crate::env::wrap_angle(base + rng.random_range(-FRAC_PI_4..=FRAC_PI_4));
        *self = Self::from_scenario(self.config.clone(), sc.map, path, sc.goal, heading);
        Ok(self.observe())
    }

    fn normalized_scan(&self) -> Vec<f64> {
        scan(&self.map, self.state.position, self.state.heading, BEAMS, MAX_RANGE)
            .into_iter()
            .map(|r| r / MAX_RANGE)
            .collect()
    }

    pub fn observe(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(OBS_DIM);
        obs.extend_from_slice(&self.scan);
        obs.extend_from_slice(&self.prev_scan);
        let s = &self.state;
        let rel = sub(s.position, self.goal);
        obs.extend([rel[0] / WORKSPACE, rel[1] / WORKSPACE]);
        obs.extend([s.speed / V_MAX, s.omega / OMEGA_MAX]);
        let g = to_local(sub(self.goal, s.position), s.heading);
        obs.extend([g[0] / WORKSPACE, g[1] / WORKSPACE]);
        let here = self.path.project(s.position).progress;
        for k in 0..LOOKAHEAD {
            let w = self.path.point_at(here + LOOKAHEAD_SPACING * (k + 1) as f64);
            let l = to_local(sub(w, s.position), s.heading);
            obs.extend([l[0] / MAX_RANGE, l[1] / MAX_RANGE]);
        }
        debug_assert_eq!(obs.len(), OBS_DIM);
        obs
    }

    /// True when the robot disc touches an obstacle or leaves the workspace.
    pub fn in_collision(&self) -> bool {
        let p = self.state.position;
        let r = ROBOT_RADIUS;
        let [w, h] = self.map.size;
        p[0] < r
            || p[1] < r
            || p[0] > w - r
            || p[1] > h - r
            || self.map.permanent.iter().any(|o| o.overlaps_disc(p, r))
            || self.map.temporary.iter().any(|o| o.shape.overlaps_disc(p, r))
    }

    pub fn reached_goal(&self) -> bool {
        dist(self.state.position, self.goal) <= GOAL_RADIUS
    }

    pub fn trace(&self) -> StepTrace {
        StepTrace {
            x: self.state.position[0],
            y: self.state.position[1],
            heading: self.state.heading,
            speed: self.state.speed,
            omega: self.state.omega,
            terms: self.last_terms,
        }
    }

    pub fn step(&mut self, action: &[f64]) -> EnvStep {
        let a = [action[0].clamp(-1.0, 1.0), action[1].clamp(-1.0, 1.0)];
        self.state = robot_step(&self.state, a, DT);
        advance_obstacles(&mut self.map, DT);
        self.steps += 1;
        let proj = self.path.project(self.state.position);
        let before = self.progress;
        self.progress = proj.progress;
        self.prev_scan = std::mem::take(&mut self.scan);
        self.scan = self.normalized_scan();

        let outcome = if self.reached_goal() {
            Outcome::Goal
        } else if self.in_collision() {
            Outcome::Collision
        } else if self.steps >= self.config.max_steps {
            Outcome::Timeout
        } else {
            Outcome::Running
        };
        let terms = RewardTerms {
            goal: goal_reward(outcome == Outcome::Goal),
            action: action_reward(&a),
            velocity: velocity_reward(self.state.speed),
            tracking: tracking_reward(proj.distance),
            progress: progress_reward(before, self.progress),
        };
        self.last_terms = terms;
        let c = &self.config;
        let (base, full) = compose_reward(&terms, c.progress_weight, c.constraint_weight, c.base_subset);
        EnvStep {
            obs: self.observe(),
            base_reward: base,
            full_reward: full,
            report_base: terms.goal + c.progress_weight * terms.progress,
            report_constraint: terms.constraint_sum(),
            terminal: matches!(outcome, Outcome::Goal | Outcome::Collision),
            truncated: outcome == Outcome::Timeout,
            outcome,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::robot::geometry::Rect;
    use crate::rng::RunRng;

    fn straight(config: RobotConfig) -> RobotEnv {
        let map = WorldMap {
            template: 1,
            size: [WORKSPACE, WORKSPACE],
            permanent: vec![],
            temporary: vec![],
        };
        let path = ReferencePath::new(vec![[2.0, 10.0], [18.0, 10.0]]);
        RobotEnv::from_scenario(config, map, path, [18.0, 10.0], 0.0)
    }

    #[test]
    fn observation_length() {
        let mut env = RobotEnv::new(RobotConfig::default());
        let mut rng = RunRng::new(3, 0);
        for _ in 0..5 {
            let obs = env.reset(&mut rng).unwrap();
            assert_eq!(obs.len(), OBS_DIM);
            assert!(obs[..2 * BEAMS].iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(!env.in_collision());
            for _ in 0..20 {
                assert_eq!(env.step(&[0.5, 0.1]).obs.len(), OBS_DIM);
            }
        }
    }

    #[test]
    fn collision_is_terminal_without_penalty() {
        let mut env = straight(RobotConfig::default());
        env.map.permanent.push(Rect::new(1.8, 9.0, 2.2, 11.0));
        let s = env.step(&[0.0, 0.0]);
        assert_eq!(s.outcome, Outcome::Collision);
        assert!(s.terminal);
        assert_eq!(env.last_terms.goal, 0.0);
    }

    #[test]
    fn goal_pays_bonus() {
        let mut env = straight(RobotConfig::default());
        env.state.position = [17.7, 10.0];
        let s = env.step(&[0.0, 0.0]);
        assert_eq!(s.outcome, Outcome::Goal);
        assert!(s.terminal);
        assert!(s.base_reward >= 100.0);
    }

    #[test]
    fn timeout_is_not_terminal() {
        let mut env = straight(RobotConfig {
            max_steps: 5,
            ..Default::default()
        });
        let mut last = None;
        for _ in 0..5 {
            last = Some(env.step(&[0.0, 0.0]));
        }
        let last = last.unwrap();
        assert_eq!(last.outcome, Outcome::Timeout);
        assert!(!last.terminal && last.truncated);
    }

    #[test]
    fn progress_along_straight_path() {
        let mut env = straight(RobotConfig::default());
        env.state.speed = V_MAX;
        let s = env.step(&[0.0, 0.0]);
        assert!((env.last_terms.progress - 1.0).abs() < 1e-12);
        assert_eq!(env.last_terms.tracking, 1.0);
        assert!((s.report_base - PROGRESS_WEIGHT).abs() < 1e-12);
    }

    #[test]
    fn reset_is_deterministic() {
        let mut a = RobotEnv::new(RobotConfig::default());
        let mut b = RobotEnv::new(RobotConfig::default());
        let oa = a.reset(&mut RunRng::new(9, 1)).unwrap();
        let ob = b.reset(&mut RunRng::new(9, 1)).unwrap();
        assert_eq!(oa, ob);
        assert_eq!(a, b);
    }
}
