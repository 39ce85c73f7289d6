use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Tolerance for geometric predicates, in meters or radians.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
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

/// Wraps an angle into (-π, π].
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// A closed 2D line segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(self.a, self.b)
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0);
        self.a + d * t
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        self.closest_point(p).dist(p)
    }

    /// Minimum distance between two segments.
    pub fn distance_to_segment(&self, o: &Segment) -> f64 {
        if segments_intersect_closed(self, o) {
            return 0.0;
        }
        self.distance_to_point(o.a)
            .min(self.distance_to_point(o.b))
            .min(o.distance_to_point(self.a))
            .min(o.distance_to_point(self.b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn from_points(a: Vec2, b: Vec2) -> Self {
        Self {
            min: Vec2::new(a.x.min(b.x), a.y.min(b.y)),
            max: Vec2::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn empty() -> Self {
        Self {
            min: Vec2::new(f64::INFINITY, f64::INFINITY),
            max: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn expand(&mut self, p: Vec2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x + EPS
            && o.min.x <= self.max.x + EPS
            && self.min.y <= o.max.y + EPS
            && o.min.y <= self.max.y + EPS
    }
}

/// True when the closed segments share at least one point.
pub fn segments_intersect_closed(s: &Segment, w: &Segment) -> bool {
    let d = s.b - s.a;
    let e = w.b - w.a;
    let denom = d.cross(e);
    let f = w.a - s.a;
    if denom.abs() <= EPS * EPS {
        // parallel: intersect only when collinear and overlapping
        if f.cross(d).abs() > EPS * d.norm().max(1.0) {
            return false;
        }
        let len_sq = d.norm_sq();
        if len_sq == 0.0 {
            return w.distance_to_point(s.a) <= EPS;
        }
        let t0 = f.dot(d) / len_sq;
        let t1 = (w.b - s.a).dot(d) / len_sq;
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        return hi >= -EPS && lo <= 1.0 + EPS;
    }
    let t = f.cross(e) / denom;
    let u = f.cross(d) / denom;
    let tol_t = EPS / d.norm();
    let tol_u = EPS / e.norm();
    (-tol_t..=1.0 + tol_t).contains(&t) && (-tol_u..=1.0 + tol_u).contains(&u)
}

/// True when the sight segment `from → to`, with both endpoints excluded,
/// touches the closed wall segment.
pub fn sight_blocked(from: Vec2, to: Vec2, wall: &Segment) -> bool {
    let d = to - from;
    let len = d.norm();
    if len <= 2.0 * EPS {
        return false;
    }
    let e = wall.b - wall.a;
    let f = wall.a - from;
    let denom = d.cross(e);
    let tol_t = EPS / len;
    if denom.abs() <= EPS * EPS {
        if f.cross(d).abs() > EPS * len {
            return false;
        }
        let len_sq = len * len;
        let t0 = f.dot(d) / len_sq;
        let t1 = (wall.b - from).dot(d) / len_sq;
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        return hi > tol_t && lo < 1.0 - tol_t;
    }
    let t = f.cross(e) / denom;
    let u = f.cross(d) / denom;
    let tol_u = EPS / e.norm();
    t > tol_t && t < 1.0 - tol_t && (-tol_u..=1.0 + tol_u).contains(&u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_wraps_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(2.5 * PI) - 0.5 * PI).abs() < 1e-12);
        assert!((normalize_angle(-2.5 * PI) + 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn crossing_and_touching_segments() {
        let s = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0));
        let w = Segment::new(Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0));
        assert!(segments_intersect_closed(&s, &w));
        let touch = Segment::new(Vec2::new(2.0, 0.0), Vec2::new(2.0, 1.0));
        assert!(segments_intersect_closed(&s, &touch));
        let apart = Segment::new(Vec2::new(3.0, -1.0), Vec2::new(3.0, 1.0));
        assert!(!segments_intersect_closed(&s, &apart));
        let collinear = Segment::new(Vec2::new(1.5, 0.0), Vec2::new(4.0, 0.0));
        assert!(segments_intersect_closed(&s, &collinear));
    }

    #[test]
    fn sight_excludes_endpoints() {
        let wall = Segment::new(Vec2::new(2.0, -1.0), Vec2::new(2.0, 1.0));
        assert!(!sight_blocked(Vec2::ZERO, Vec2::new(2.0, 0.0), &wall));
        assert!(sight_blocked(Vec2::ZERO, Vec2::new(2.1, 0.0), &wall));
        assert!(!sight_blocked(Vec2::ZERO, Vec2::new(1.9, 0.0), &wall));
    }

    #[test]
    fn segment_distance() {
        let s = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0));
        let o = Segment::new(Vec2::new(1.0, 1.0), Vec2::new(1.0, 3.0));
        assert!((s.distance_to_segment(&o) - 1.0).abs() < 1e-12);
    }
}
