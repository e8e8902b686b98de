//! Mobile-robot navigation among permanent and temporary obstacles.

pub mod astar;
pub mod dynamics;
pub mod geometry;
pub mod lidar;
pub mod map;
pub mod path;
pub mod reward;
pub mod world;

pub use reward::BaseSubset;
pub use world::{RobotConfig, RobotEnv, StepTrace, OBS_DIM};
