//! Arc-length parameterized reference polyline.

use serde::{Deserialize, Serialize};

use crate::env::robot::geometry::{add, dist, project_on_segment, scale, sub, Vec2};

/// Distances within this margin count as ties during projection.
const TIE_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePath {
    points: Vec<Vec2>,
    /// Arc length at each vertex.
    cumulative: Vec<f64>,
}

/// Where a point projects onto the path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arc length of the closest point.
    pub progress: f64,
    /// Distance from the point to the path.
    pub distance: f64,
}

impl ReferencePath {
    pub fn new(points: Vec<Vec2>) -> Self {
        assert!(!points.is_empty(), "reference path needs a waypoint");
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            acc += dist(w[0], w[1]);
            cumulative.push(acc);
        }
        Self { points, cumulative }
    }

    /// Drop interior vertices that continue in the same direction.
    pub fn simplified(points: Vec<Vec2>) -> Self {
        let mut out: Vec<Vec2> = Vec::with_capacity(points.len());
        for p in points {
            if out.last().is_some_and(|q| dist(*q, p) < 1e-12) {
                continue;
            }
            if out.len() >= 2 {
                let a = out[out.len() - 2];
                let b = out[out.len() - 1];
                let u = sub(b, a);
                let v = sub(p, b);
                let cross = u[0] * v[1] - u[1] * v[0];
                let dotp = u[0] * v[0] + u[1] * v[1];
                if cross.abs() < 1e-12 && dotp > 0.0 {
                    out.pop();
                }
            }
            out.push(p);
        }
        Self::new(out)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    /// Closest point on the polyline; among equally close candidates the one
    /// furthest along the path wins.
    pub fn project(&self, p: Vec2) -> Projection {
        if self.points.len() == 1 {
            return Projection {
                progress: 0.0,
                distance: dist(p, self.points[0]),
            };
        }
        let mut best = Projection {
            progress: 0.0,
            distance: f64::INFINITY,
        };
        for (k, w) in self.points.windows(2).enumerate() {
            let (t, d) = project_on_segment(p, w[0], w[1]);
            let s = self.cumulative[k] + t * (self.cumulative[k + 1] - self.cumulative[k]);
            if d < best.distance - TIE_EPS || (d <= best.distance + TIE_EPS && s > best.progress) {
                best = Projection {
                    progress: s,
                    distance: d,
                };
            }
        }
        best
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> Vec2 {
        if s <= 0.0 || self.points.len() == 1 {
            return self.points[0];
        }
        if s >= self.length() {
            return *self.points.last().expect("non-empty");
        }
        let k = self.cumulative.partition_point(|&c| c <= s).saturating_sub(1);
        let k = k.min(self.points.len() - 2);
        let seg = self.cumulative[k + 1] - self.cumulative[k];
        let t = if seg > 0.0 { (s - self.cumulative[k]) / seg } else { 0.0 };
        add(self.points[k], scale(sub(self.points[k + 1], self.points[k]), t))
    }
}
