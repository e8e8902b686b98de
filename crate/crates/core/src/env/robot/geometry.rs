//! Planar primitives: axis-aligned rectangles, circles, rays.

use serde::{Deserialize, Serialize};

pub type Vec2 = [f64; 2];

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(a: Vec2, k: f64) -> Vec2 {
    [a[0] * k, a[1] * k]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

/// Express world vector `v` in a frame rotated by `heading`.
pub fn to_local(v: Vec2, heading: f64) -> Vec2 {
    let (s, c) = heading.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: [x0.min(x1), y0.min(y1)],
            max: [x0.max(x1), y0.max(y1)],
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        let dx = (self.min[0] - p[0]).max(0.0).max(p[0] - self.max[0]);
        let dy = (self.min[1] - p[1]).max(0.0).max(p[1] - self.max[1]);
        dx.hypot(dy)
    }

    pub fn overlaps_disc(&self, center: Vec2, radius: f64) -> bool {
        self.distance(center) < radius
    }

    /// Entry distance of a ray (unit `dir`) into the rectangle, slab method.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for k in 0..2 {
            if dir[k] == 0.0 {
                if origin[k] < self.min[k] || origin[k] > self.max[k] {
                    return None;
                }
            } else {
                let a = (self.min[k] - origin[k]) / dir[k];
                let b = (self.max[k] - origin[k]) / dir[k];
                t_near = t_near.max(a.min(b));
                t_far = t_far.min(a.max(b));
            }
        }
        if t_near > t_far || t_far < 0.0 {
            None
        } else {
            Some(t_near.max(0.0))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn overlaps_disc(&self, center: Vec2, radius: f64) -> bool {
        dist(self.center, center) < self.radius + radius
    }

    /// Entry distance of a ray (unit `dir`) into the circle; 0 from inside.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let oc = sub(origin, self.center);
        let b = dot(oc, dir);
        let c = dot(oc, oc) - self.radius * self.radius;
        if c <= 0.0 {
            return Some(0.0);
        }
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let t = -b - disc.sqrt();
        (t >= 0.0).then_some(t)
    }
}

/// Exit distance from inside the box `[0, w] x [0, h]`.
pub fn ray_exit_box(origin: Vec2, dir: Vec2, size: Vec2) -> f64 {
    let mut t = f64::INFINITY;
    for k in 0..2 {
        if dir[k] > 0.0 {
            t = t.min((size[k] - origin[k]) / dir[k]);
        } else if dir[k] < 0.0 {
            t = t.min(-origin[k] / dir[k]);
        }
    }
    t.max(0.0)
}

/// Closest point on segment `a-b` to `p`, as (parameter in [0,1], distance).
pub fn project_on_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    };
    (t, dist(p, add(a, scale(ab, t))))
}
