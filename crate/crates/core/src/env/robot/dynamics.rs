//! Unicycle driven by translational and angular acceleration.

use serde::{Deserialize, Serialize};

use crate::env::robot::geometry::Vec2;

pub const DT: f64 = 0.1;
pub const V_MAX: f64 = 1.5;
pub const OMEGA_MAX: f64 = 2.0;
pub const ACCEL_MAX: f64 = 2.0;
pub const ANGULAR_ACCEL_MAX: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub omega: f64,
}

/// Speeds update first; heading and position then integrate the new speeds.
pub fn robot_step(s: &RobotState, action: [f64; 2], dt: f64) -> RobotState {
    let a = [action[0].clamp(-1.0, 1.0), action[1].clamp(-1.0, 1.0)];
    let speed = (s.speed + a[0] * ACCEL_MAX * dt).clamp(0.0, V_MAX);
    let omega = (s.omega + a[1] * ANGULAR_ACCEL_MAX * dt).clamp(-OMEGA_MAX, OMEGA_MAX);
    let heading = crate::env::wrap_angle(s.heading + omega * dt);
    let (sin, cos) = heading.sin_cos();
    RobotState {
        position: [s.position[0] + speed * cos * dt, s.position[1] + speed * sin * dt],
        heading,
        speed,
        omega,
    }
}
