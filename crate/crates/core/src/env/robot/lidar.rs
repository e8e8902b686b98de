//! 2D raycast range sensor.

use std::f64::consts::TAU;

use crate::env::robot::geometry::{ray_exit_box, Vec2};
use crate::env::robot::map::WorldMap;

pub const BEAMS: usize = 72;
pub const MAX_RANGE: f64 = 5.0;

/// Unit direction of beam `k` for a robot facing `heading`. Beam 0 points
/// forward; bearings advance counter-clockwise.
pub fn beam_direction(heading: f64, k: usize, beams: usize) -> Vec2 {
    let (s, c) = (heading + TAU * k as f64 / beams as f64).sin_cos();
    [c, s]
}

/// Distance along one ray to the nearest obstacle or workspace edge.
pub fn cast(map: &WorldMap, origin: Vec2, dir: Vec2, max_range: f64) -> f64 {
    let mut best = ray_exit_box(origin, dir, map.size).min(max_range);
    for r in &map.permanent {
        if let Some(t) = r.ray_hit(origin, dir) {
            best = best.min(t);
        }
    }
    for o in &map.temporary {
        if let Some(t) = o.shape.ray_hit(origin, dir) {
            best = best.min(t);
        }
    }
    best
}

/// Raw ranges in metres, each capped at `max_range`.
pub fn scan(map: &WorldMap, position: Vec2, heading: f64, beams: usize, max_range: f64) -> Vec<f64> {
    (0..beams)
        .map(|k| cast(map, position, beam_direction(heading, k, beams), max_range))
        .collect()
}
