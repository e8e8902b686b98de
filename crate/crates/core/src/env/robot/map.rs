//! Randomized maps: permanent walls from a handful of templates plus
//! temporary circular obstacles, some of them moving.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::robot::astar::{astar, Cell, Grid};
use crate::env::robot::geometry::{dist, Circle, Rect, Vec2};
use crate::{Error, Result};

pub const WORKSPACE: f64 = 20.0;
pub const GRID_RESOLUTION: f64 = 0.25;
pub const ROBOT_RADIUS: f64 = 0.3;
const WALL: f64 = 0.4;
const START_GOAL_TRIES: usize = 100;
const MAP_TRIES: usize = 100;

/// Number of built-in permanent-obstacle templates.
pub const TEMPLATE_COUNT: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporaryObstacle {
    pub shape: Circle,
    /// Zero for static obstacles.
    pub velocity: Vec2,
}

impl TemporaryObstacle {
    pub fn is_dynamic(&self) -> bool {
        self.velocity != [0.0, 0.0]
    }
}

/// Randomization bounds for map generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    /// Templates to sample from.
    pub templates: Vec<usize>,
    pub max_temporary: usize,
    pub temporary_radius: (f64, f64),
    pub dynamic_speed: f64,
    /// Straight-line start-goal distance bounds in metres.
    pub start_goal_distance: (f64, f64),
    /// Keep temporary obstacles this far from start and goal.
    pub clearance: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            templates: (0..TEMPLATE_COUNT).collect(),
            max_temporary: 6,
            temporary_radius: (0.3, 0.6),
            dynamic_speed: 0.5,
            start_goal_distance: (5.0, 15.0),
            clearance: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    pub template: usize,
    pub size: Vec2,
    pub permanent: Vec<Rect>,
    pub temporary: Vec<TemporaryObstacle>,
}

/// A generated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub map: WorldMap,
    pub grid: Grid,
    pub start: Vec2,
    pub goal: Vec2,
    pub cells: Vec<Cell>,
    pub path_cost: f64,
}

/// Templates 0 and 2 carry moving obstacles; 1 and 3 only static ones.
pub fn template_has_dynamic(template: usize) -> bool {
    template % 2 == 0
}

fn hwall(x0: f64, x1: f64, y: f64) -> Rect {
    Rect::new(x0, y - WALL / 2.0, x1, y + WALL / 2.0)
}

fn vwall(x: f64, y0: f64, y1: f64) -> Rect {
    Rect::new(x - WALL / 2.0, y0, x + WALL / 2.0, y1)
}

/// Wall along `x` spanning the workspace with one door of width `door`.
fn vwall_with_door(x: f64, door_center: f64, door: f64) -> [Rect; 2] {
    [
        vwall(x, 0.0, door_center - door / 2.0),
        vwall(x, door_center + door / 2.0, WORKSPACE),
    ]
}

fn hwall_with_door(y: f64, door_center: f64, door: f64) -> [Rect; 2] {
    [
        hwall(0.0, door_center - door / 2.0, y),
        hwall(door_center + door / 2.0, WORKSPACE, y),
    ]
}

/// Permanent obstacles for a template with jittered geometry.
pub fn template_walls<R: Rng + ?Sized>(template: usize, rng: &mut R) -> Vec<Rect> {
    let mut walls = Vec::new();
    match template % TEMPLATE_COUNT {
        // open hall with a few free-standing wall segments
        0 => {
            let n = rng.random_range(2..=4);
            for _ in 0..n {
                let len = rng.random_range(3.0..7.0);
                if rng.random_bool(0.5) {
                    let x0 = rng.random_range(2.0..WORKSPACE - 2.0 - len);
                    walls.push(hwall(x0, x0 + len, rng.random_range(3.0..17.0)));
                } else {
                    let y0 = rng.random_range(2.0..WORKSPACE - 2.0 - len);
                    walls.push(vwall(rng.random_range(3.0..17.0), y0, y0 + len));
                }
            }
        }
        // corridor: two long parallel walls with openings at the ends
        1 => {
            let mid = rng.random_range(8.0..12.0);
            let width = rng.random_range(2.5..4.0);
            let gap_lo = rng.random_range(2.0..4.0);
            let gap_hi = rng.random_range(2.0..4.0);
            walls.push(hwall(gap_lo, WORKSPACE, mid - width / 2.0));
            walls.push(hwall(0.0, WORKSPACE - gap_hi, mid + width / 2.0));
        }
        // four rooms connected by doors
        2 => {
            let door = rng.random_range(1.6..2.4);
            let cx = rng.random_range(8.0..12.0);
            let cy = rng.random_range(8.0..12.0);
            let [a, b] = vwall_with_door(cx, rng.random_range(2.5..cy - 2.0), door);
            let [c, d] = vwall_with_door(cx, rng.random_range(cy + 2.0..17.5), door);
            // keep only the outer pieces of each half so both doors exist
            walls.push(Rect::new(a.min[0], a.min[1], a.max[0], a.max[1]));
            walls.push(Rect::new(b.min[0], b.min[1], b.max[0], cy));
            walls.push(Rect::new(c.min[0], cy, c.max[0], c.max[1]));
            walls.push(Rect::new(d.min[0], d.min[1], d.max[0], d.max[1]));
            let [e, f] = hwall_with_door(cy, rng.random_range(2.5..cx - 2.0), door);
            let [g, h] = hwall_with_door(cy, rng.random_range(cx + 2.0..17.5), door);
            walls.push(e);
            walls.push(Rect::new(f.min[0], f.min[1], cx, f.max[1]));
            walls.push(Rect::new(cx, g.min[1], g.max[0], g.max[1]));
            walls.push(h);
        }
        // zig-zag: alternating horizontal walls
        _ => {
            let rows = rng.random_range(2..=3);
            let gap = rng.random_range(2.5..3.5);
            for k in 0..rows {
                let y = WORKSPACE * (k + 1) as f64 / (rows + 1) as f64 + rng.random_range(-0.8..0.8);
                if k % 2 == 0 {
                    walls.push(hwall(0.0, WORKSPACE - gap, y));
                } else {
                    walls.push(hwall(gap, WORKSPACE, y));
                }
            }
        }
    }
    walls.retain(|r| r.max[0] - r.min[0] > 1e-6 && r.max[1] - r.min[1] > 1e-6);
    walls
}

/// Grid cell containing a metric point.
pub fn cell_of(p: Vec2) -> Cell {
    let n = (WORKSPACE / GRID_RESOLUTION) as usize;
    let x = ((p[0] / GRID_RESOLUTION).floor().max(0.0) as usize).min(n - 1);
    let y = ((p[1] / GRID_RESOLUTION).floor().max(0.0) as usize).min(n - 1);
    (x, y)
}

pub fn cell_center(c: Cell) -> Vec2 {
    [
        (c.0 as f64 + 0.5) * GRID_RESOLUTION,
        (c.1 as f64 + 0.5) * GRID_RESOLUTION,
    ]
}

/// Occupancy of permanent obstacles, inflated by the robot radius so every
/// free cell centre is a collision-free robot position.
pub fn occupancy_grid(map: &WorldMap) -> Grid {
    let w = (map.size[0] / GRID_RESOLUTION).round() as usize;
    let h = (map.size[1] / GRID_RESOLUTION).round() as usize;
    let mut grid = Grid::new(w, h);
    let margin = ROBOT_RADIUS + 0.05;
    for y in 0..h {
        for x in 0..w {
            let c = cell_center((x, y));
            let near_edge = c[0] < margin
                || c[1] < margin
                || c[0] > map.size[0] - margin
                || c[1] > map.size[1] - margin;
            if near_edge || map.permanent.iter().any(|r| r.distance(c) < margin) {
                grid.set_blocked((x, y), true);
            }
        }
    }
    grid
}

/// Sample a template, walls, temporary obstacles, and a reachable start and
/// goal. `template` pins the template; otherwise one is drawn from `config`.
pub fn generate_map<R: Rng + ?Sized>(rng: &mut R, template: Option<usize>, config: &MapConfig) -> Result<Scenario> {
    if config.templates.is_empty() && template.is_none() {
        return Err(Error::config("no map templates configured"));
    }
    for _ in 0..MAP_TRIES {
        let t = match template {
            Some(t) => t,
            None => config.templates[rng.random_range(0..config.templates.len())],
        };
        let mut map = WorldMap {
            template: t,
            size: [WORKSPACE, WORKSPACE],
            permanent: template_walls(t, rng),
            temporary: Vec::new(),
        };
        let grid = occupancy_grid(&map);
        let free: Vec<Cell> = (0..grid.height)
            .flat_map(|y| (0..grid.width).map(move |x| (x, y)))
            .filter(|&c| grid.is_free(c))
            .collect();
        if free.len() < 2 {
            continue;
        }
        for _ in 0..START_GOAL_TRIES {
            let s = free[rng.random_range(0..free.len())];
            let g = free[rng.random_range(0..free.len())];
            let (start, goal) = (cell_center(s), cell_center(g));
            let d = dist(start, goal);
            if d < config.start_goal_distance.0 || d > config.start_goal_distance.1 {
                continue;
            }
            let Ok((cells, cost)) = astar(&grid, s, g) else {
                continue;
            };
            place_temporary(&mut map, start, goal, config, rng);
            return Ok(Scenario {
                map,
                grid,
                start,
                goal,
                cells,
                path_cost: cost,
            });
        }
    }
    Err(Error::Planning("could not generate a map with a reachable goal".into()))
}

fn place_temporary<R: Rng + ?Sized>(map: &mut WorldMap, start: Vec2, goal: Vec2, config: &MapConfig, rng: &mut R) {
    let count = rng.random_range(0..=config.max_temporary);
    let dynamic = template_has_dynamic(map.template);
    let mut attempts = 0;
    while map.temporary.len() < count && attempts < 200 {
        attempts += 1;
        let (lo, hi) = config.temporary_radius;
        let radius = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let center = [
            rng.random_range(radius..map.size[0] - radius),
            rng.random_range(radius..map.size[1] - radius),
        ];
        if dist(center, start) < config.clearance + radius || dist(center, goal) < config.clearance + radius {
            continue;
        }
        if map.permanent.iter().any(|r| r.overlaps_disc(center, radius + 0.1)) {
            continue;
        }
        let velocity = if dynamic && rng.random_bool(0.5) {
            let heading = rng.random_range(-PI..PI);
            [config.dynamic_speed * heading.cos(), config.dynamic_speed * heading.sin()]
        } else {
            [0.0, 0.0]
        };
        map.temporary.push(TemporaryObstacle {
            shape: Circle { center, radius },
            velocity,
        });
    }
}

/// Move every dynamic obstacle by `velocity * dt`, reflecting the velocity
/// component whose motion would hit a permanent obstacle or the boundary.
pub fn advance_obstacles(map: &mut WorldMap, dt: f64) {
    let permanent = &map.permanent;
    let size = map.size;
    let blocked = |c: Vec2, r: f64| {
        c[0] < r || c[1] < r || c[0] > size[0] - r || c[1] > size[1] - r
            || permanent.iter().any(|w| w.overlaps_disc(c, r))
    };
    for ob in map.temporary.iter_mut().filter(|o| o.is_dynamic()) {
        let r = ob.shape.radius;
        for k in 0..2 {
            let mut moved = ob.shape.center;
            moved[k] += ob.velocity[k] * dt;
            if blocked(moved, r) {
                ob.velocity[k] = -ob.velocity[k];
            } else {
                ob.shape.center = moved;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RunRng;

    #[test]
    fn fixed_seed_is_deterministic() {
        let cfg = MapConfig::default();
        let a = generate_map(&mut RunRng::new(42, 0), None, &cfg).unwrap();
        let b = generate_map(&mut RunRng::new(42, 0), None, &cfg).unwrap();
        assert_eq!(a.map, b.map);
        assert_eq!(a.start, b.start);
        assert_eq!(a.goal, b.goal);
    }

    #[test]
    fn every_template_generates() {
        let cfg = MapConfig::default();
        let mut rng = RunRng::new(1, 0);
        for t in 0..TEMPLATE_COUNT {
            for _ in 0..20 {
                let s = generate_map(&mut rng, Some(t), &cfg).unwrap();
                assert!(s.grid.is_free(cell_of(s.start)));
                assert!(s.grid.is_free(cell_of(s.goal)));
                if !template_has_dynamic(t) {
                    assert!(s.map.temporary.iter().all(|o| !o.is_dynamic()));
                }
            }
        }
    }

    #[test]
    fn obstacles_reflect_and_stay_inside() {
        let mut map = WorldMap {
            template: 0,
            size: [WORKSPACE, WORKSPACE],
            permanent: vec![Rect::new(10.0, 0.0, 10.4, 20.0)],
            temporary: vec![TemporaryObstacle {
                shape: Circle {
                    center: [9.0, 5.0],
                    radius: 0.4,
                },
                velocity: [0.5, 0.0],
            }],
        };
        for _ in 0..30 {
            advance_obstacles(&mut map, 0.1);
            let c = map.temporary[0].shape;
            assert!(!map.permanent[0].overlaps_disc(c.center, c.radius));
            assert!(c.center[0] >= c.radius);
        }
        assert!(map.temporary[0].velocity[0] < 0.0);
    }
}
