//! Planar geometry used by the map, the traffic model and the blockage test.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A 2D vector in meters (positions) or meters/second (velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Unit vector, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0).then(|| Vec2::new(self.x / n, self.y / n))
    }

    /// Angle in `[0, π]` between two vectors; zero when either is null.
    pub fn angle_to(self, o: Vec2) -> f64 {
        let denom = self.norm() * o.norm();
        if denom == 0.0 {
            return 0.0;
        }
        (self.dot(o) / denom).clamp(-1.0, 1.0).acos()
    }

    pub fn lerp(self, o: Vec2, f: f64) -> Vec2 {
        self + (o - self) * f
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Rect {
            min: Vec2::new(a.x.min(b.x), a.y.min(b.y)),
            max: Vec2::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Closest point of the (closed) rectangle to `p`.
    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    pub fn overlaps(&self, o: &Rect) -> bool {
        self.min.x < o.max.x && o.min.x < self.max.x && self.min.y < o.max.y && o.min.y < self.max.y
    }

    fn shrunk(&self, eps: f64) -> Rect {
        Rect {
            min: Vec2::new(self.min.x + eps, self.min.y + eps),
            max: Vec2::new(self.max.x - eps, self.max.y - eps),
        }
    }

    /// Parameter interval `[t0, t1] ⊆ [0, 1]` over which the segment `a→b`
    /// lies inside the rectangle's interior, if non-empty.
    ///
    /// Grazing contact with an edge or corner does not count.
    pub fn clip_segment(&self, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
        liang_barsky(&self.shrunk(1e-7), a, b)
    }
}

fn liang_barsky(r: &Rect, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
    let d = b - a;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-d.x, a.x - r.min.x),
        (d.x, r.max.x - a.x),
        (-d.y, a.y - r.min.y),
        (d.y, r.max.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t1 > t0).then_some((t0, t1))
}

/// Rectangle rotated to an arbitrary heading, used for vehicle outlines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    /// Unit vector along the long axis.
    pub axis: Vec2,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedRect {
    pub fn new(center: Vec2, heading: Vec2, length: f64, width: f64) -> Self {
        OrientedRect {
            center,
            axis: heading.normalized().unwrap_or(Vec2::new(1.0, 0.0)),
            half_length: length / 2.0,
            half_width: width / 2.0,
        }
    }

    fn to_local(self, p: Vec2) -> Vec2 {
        let rel = p - self.center;
        let normal = Vec2::new(-self.axis.y, self.axis.x);
        Vec2::new(rel.dot(self.axis), rel.dot(normal))
    }

    /// Same contract as [`Rect::clip_segment`], in the outline's own frame.
    pub fn clip_segment(&self, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
        let local = Rect {
            min: Vec2::new(-self.half_length, -self.half_width),
            max: Vec2::new(self.half_length, self.half_width),
        };
        local.clip_segment(self.to_local(a), self.to_local(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_between_vectors() {
        let a = Vec2::new(1.0, 0.0);
        assert_eq!(a.angle_to(Vec2::new(2.0, 0.0)), 0.0);
        assert!((a.angle_to(Vec2::new(0.0, 3.0)) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((a.angle_to(Vec2::new(-1.0, 0.0)) - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(a.angle_to(Vec2::ZERO), 0.0);
    }

    #[test]
    fn clip_through_and_miss() {
        let r = Rect::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0));
        let (t0, t1) = r.clip_segment(Vec2::new(-5.0, 5.0), Vec2::new(15.0, 5.0)).unwrap();
        assert!((t0 - 0.25).abs() < 1e-6 && (t1 - 0.75).abs() < 1e-6);
        assert!(r.clip_segment(Vec2::new(-5.0, 11.0), Vec2::new(15.0, 11.0)).is_none());
    }

    #[test]
    fn grazing_an_edge_is_not_blocking() {
        let r = Rect::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0));
        assert!(r.clip_segment(Vec2::new(-5.0, 10.0), Vec2::new(15.0, 10.0)).is_none());
        assert!(r.clip_segment(Vec2::new(-1.0, 9.0), Vec2::new(1.0, 11.0)).is_none());
    }

    #[test]
    fn oriented_rect_rotated() {
        // 45 degree truck outline centred at the origin.
        let o = OrientedRect::new(Vec2::ZERO, Vec2::new(1.0, 1.0), 10.0, 2.5);
        assert!(o.clip_segment(Vec2::new(-3.0, 3.0), Vec2::new(3.0, -3.0)).is_some());
        // Passes 3 m beside the long side.
        assert!(o
            .clip_segment(Vec2::new(-10.0, -10.0 + 6.0), Vec2::new(10.0, 10.0 + 6.0))
            .is_none());
    }
}
