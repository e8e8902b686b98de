//! 8-connected grid A* with the octile heuristic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Row-major occupancy grid; `true` means blocked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub blocked: Vec<bool>,
}

pub type Cell = (usize, usize);

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            blocked: vec![false; width * height],
        }
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_free(&self, (x, y): Cell) -> bool {
        x < self.width && y < self.height && !self.blocked[y * self.width + x]
    }

    pub fn set_blocked(&mut self, (x, y): Cell, v: bool) {
        self.blocked[y * self.width + x] = v;
    }

    /// Legal moves from `c`: 8 neighbours, diagonals only when both adjacent
    /// straight cells are free (no corner cutting). Cost 1 or sqrt(2).
    pub fn neighbours(&self, c: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const DIRS: [(i64, i64); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        let (x, y) = (c.0 as i64, c.1 as i64);
        DIRS.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            if !self.in_bounds(nx, ny) || !self.is_free((nx as usize, ny as usize)) {
                return None;
            }
            if dx != 0 && dy != 0 {
                let side_a = (nx as usize, y as usize);
                let side_b = (x as usize, ny as usize);
                if !self.is_free(side_a) || !self.is_free(side_b) {
                    return None;
                }
                Some(((nx as usize, ny as usize), SQRT2))
            } else {
                Some(((nx as usize, ny as usize), 1.0))
            }
        })
    }
}

/// Cost of a cell path, recomputed from its move counts so equal-cost paths
/// compare exactly.
pub fn path_cost(cells: &[Cell]) -> f64 {
    let mut straight = 0u64;
    let mut diagonal = 0u64;
    for w in cells.windows(2) {
        if w[0].0 != w[1].0 && w[0].1 != w[1].1 {
            diagonal += 1;
        } else {
            straight += 1;
        }
    }
    straight as f64 + diagonal as f64 * SQRT2
}

pub fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) + (SQRT2 - 1.0) * dx.min(dy)
}

#[derive(Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    cell: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then prefer larger g (deeper), then lower index
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest cell path from `start` to `goal` (inclusive) and its cost.
pub fn astar(grid: &Grid, start: Cell, goal: Cell) -> Result<(Vec<Cell>, f64)> {
    if !grid.is_free(start) || !grid.is_free(goal) {
        return Err(Error::Planning("start or goal cell is blocked".into()));
    }
    let idx = |c: Cell| c.1 * grid.width + c.0;
    let cell_of = |i: usize| (i % grid.width, i / grid.width);
    let n = grid.width * grid.height;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[idx(start)] = 0.0;
    open.push(Open {
        f: octile(start, goal),
        g: 0.0,
        cell: idx(start),
    });
    while let Some(Open { g: gc, cell, .. }) = open.pop() {
        if closed[cell] || gc > g[cell] {
            continue;
        }
        closed[cell] = true;
        if cell == idx(goal) {
            let mut path = vec![goal];
            let mut cur = cell;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                path.push(cell_of(cur));
            }
            path.reverse();
            let cost = path_cost(&path);
            return Ok((path, cost));
        }
        for (next, step) in grid.neighbours(cell_of(cell)) {
            let ni = idx(next);
            if closed[ni] {
                continue;
            }
            let cand = gc + step;
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = cell;
                open.push(Open {
                    f: cand + octile(next, goal),
                    g: cand,
                    cell: ni,
                });
            }
        }
    }
    Err(Error::Planning(format!("no path from {start:?} to {goal:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_equals_goal() {
        let g = Grid::new(4, 4);
        let (path, cost) = astar(&g, (1, 2), (1, 2)).unwrap();
        assert_eq!(path, vec![(1, 2)]);
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn opposite_corners_of_3x3() {
        let g = Grid::new(3, 3);
        let (path, cost) = astar(&g, (0, 0), (2, 2)).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(cost, 2.0 * SQRT2);
    }

    #[test]
    fn wall_forces_detour() {
        let mut g = Grid::new(5, 5);
        for y in 0..4 {
            g.set_blocked((2, y), true);
        }
        let (path, cost) = astar(&g, (0, 0), (4, 0)).unwrap();
        assert!(path.iter().all(|&c| g.is_free(c)));
        // up to row 4 and back: 4 diagonal-ish moves cannot cut the corner
        assert!(cost > 8.0);
    }

    #[test]
    fn unreachable_goal() {
        let mut g = Grid::new(3, 3);
        for y in 0..3 {
            g.set_blocked((1, y), true);
        }
        assert!(matches!(astar(&g, (0, 0), (2, 2)), Err(Error::Planning(_))));
    }

    #[test]
    fn blocked_endpoint() {
        let mut g = Grid::new(3, 3);
        g.set_blocked((2, 2), true);
        assert!(astar(&g, (0, 0), (2, 2)).is_err());
    }
}
