//! Planar world: poses, walls, landmarks, the camera view cone and the
//! co-visibility count between two poses.

mod geom;
pub mod gen;
mod io;

pub use geom::{normalize_angle, segments_intersect_closed, sight_blocked, Aabb, Segment, Vec2, EPS};
pub use io::{load_map, map_from_json, map_to_json, save_map, MAP_SCHEMA_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cap applied to the co-visible landmark count.
pub const OVERLAP_CAP: u32 = 600;

/// Landmarks must lie within this distance of some wall.
pub const WALL_EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// Robot/camera pose. `theta` is kept in (-π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn at(position: Vec2, theta: f64) -> Self {
        Self::new(position.x, position.y, theta)
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    /// Rotate by `dtheta`, then translate `dist` along (forward) or against
    /// (backward) the new heading. No collision check.
    pub fn stepped(&self, direction: Direction, dtheta: f64, dist: f64) -> Pose {
        let theta = normalize_angle(self.theta + dtheta);
        let (s, c) = theta.sin_cos();
        let k = direction.sign() * dist;
        Pose {
            x: self.x + k * c,
            y: self.y + k * s,
            theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub id: u32,
    pub position: Vec2,
    /// Unit vector pointing away from the surface the landmark sits on.
    pub normal: Vec2,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.xmin - EPS && p.x <= self.xmax + EPS && p.y >= self.ymin - EPS && p.y <= self.ymax + EPS
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    pub name: String,
    pub bounds: Bounds,
    pub walls: Vec<Segment>,
    pub landmarks: Vec<Landmark>,
    pub start: Pose,
    pub goal: Vec2,
}

impl WorldMap {
    /// Checks the structural invariants: start and goal inside bounds and off
    /// every wall, unit normals, positive scales, landmarks on wall surfaces.
    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if !(b.xmin < b.xmax && b.ymin < b.ymax) {
            return Err(Error::Format(format!("map '{}': empty bounds", self.name)));
        }
        for (label, p) in [("start", self.start.position()), ("goal", self.goal)] {
            if !b.contains(p) {
                return Err(Error::Format(format!("map '{}': {label} outside bounds", self.name)));
            }
            if self.on_wall(p, WALL_EPS) {
                return Err(Error::Format(format!("map '{}': {label} lies on a wall", self.name)));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for lm in &self.landmarks {
            if !ids.insert(lm.id) {
                return Err(Error::Format(format!("map '{}': duplicate landmark id {}", self.name, lm.id)));
            }
            if (lm.normal.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Format(format!("landmark {}: normal is not unit length", lm.id)));
            }
            if !(lm.scale > 0.0) {
                return Err(Error::Format(format!("landmark {}: scale must be positive", lm.id)));
            }
            if !self.on_wall(lm.position, WALL_EPS) {
                return Err(Error::Format(format!("landmark {}: not within 1 cm of any wall", lm.id)));
            }
        }
        Ok(())
    }

    pub fn on_wall(&self, p: Vec2, tol: f64) -> bool {
        self.walls.iter().any(|w| w.distance_to_point(p) <= tol)
    }

    pub fn clearance(&self, p: Vec2) -> f64 {
        self.walls
            .iter()
            .map(|w| w.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the first wall touched by the closed segment, if any.
    pub fn first_collision(&self, seg: &Segment) -> Option<usize> {
        let bb = seg.bbox();
        self.walls
            .iter()
            .position(|w| w.bbox().overlaps(&bb) && segments_intersect_closed(seg, w))
    }

    /// True when the segment keeps at least `margin` from every wall.
    pub fn segment_clear(&self, seg: &Segment, margin: f64) -> bool {
        self.walls.iter().all(|w| w.distance_to_segment(seg) >= margin)
    }

    pub fn line_of_sight(&self, from: Vec2, to: Vec2) -> bool {
        let mut bb = Aabb::from_points(from, to);
        bb.min = bb.min - Vec2::new(EPS, EPS);
        bb.max = bb.max + Vec2::new(EPS, EPS);
        !self
            .walls
            .iter()
            .any(|w| w.bbox().overlaps(&bb) && sight_blocked(from, to, w))
    }

    pub fn total_wall_length(&self) -> f64 {
        self.walls.iter().map(Segment::length).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Half of the horizontal field of view, radians.
    pub half_fov: f64,
    pub min_range: f64,
    pub max_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            half_fov: 31f64.to_radians(),
            min_range: 0.3,
            max_range: 8.0,
        }
    }
}

impl CameraModel {
    pub fn new(half_fov: f64, min_range: f64, max_range: f64) -> Result<Self> {
        let cam = Self {
            half_fov,
            min_range,
            max_range,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_fov > 0.0 && self.half_fov < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config("camera half_fov must lie in (0, π/2)".into()));
        }
        if !(self.min_range > 0.0 && self.min_range < self.max_range) {
            return Err(Error::Config("camera requires 0 < min_range < max_range".into()));
        }
        Ok(())
    }

    /// Range and bearing test only (no occlusion). Boundary points count as inside.
    #[inline]
    pub fn in_cone(&self, pose: &Pose, heading: Vec2, point: Vec2) -> bool {
        let d = point - pose.position();
        let dist_sq = d.norm_sq();
        let lo = self.min_range - EPS;
        let hi = self.max_range + EPS;
        if dist_sq < lo * lo || dist_sq > hi * hi {
            return false;
        }
        let dist = dist_sq.sqrt();
        // cheap accept/reject on the cosine, exact angle only near the edge
        let cos = heading.dot(d) / dist;
        let edge = self.half_fov.cos();
        if cos >= edge + 1e-7 {
            return true;
        }
        if cos < edge - 1e-7 {
            return false;
        }
        normalize_angle(d.angle() - pose.theta).abs() <= self.half_fov + EPS
    }
}

/// Landmarks visible from `pose`: inside the view cone and unoccluded.
/// Returns indices into `map.landmarks`, ascending.
pub fn visible_indices(map: &WorldMap, cam: &CameraModel, pose: &Pose) -> Vec<usize> {
    let heading = pose.heading();
    let in_cone: Vec<usize> = map
        .landmarks
        .iter()
        .enumerate()
        .filter(|(_, lm)| cam.in_cone(pose, heading, lm.position))
        .map(|(i, _)| i)
        .collect();
    filter_unoccluded(map, pose.position(), in_cone.into_iter(), usize::MAX).0
}

/// Visible landmark ids, ascending.
pub fn visible_set(map: &WorldMap, cam: &CameraModel, pose: &Pose) -> Vec<u32> {
    let mut ids: Vec<u32> = visible_indices(map, cam, pose)
        .into_iter()
        .map(|i| map.landmarks[i].id)
        .collect();
    ids.sort_unstable();
    ids
}

/// Keeps candidates with a clear line of sight from `eye`, stopping once
/// `limit` have been accepted. Returns the kept indices and whether the
/// limit cut the scan short.
fn filter_unoccluded(
    map: &WorldMap,
    eye: Vec2,
    candidates: impl Iterator<Item = usize>,
    limit: usize,
) -> (Vec<usize>, bool) {
    let candidates: Vec<usize> = candidates.collect();
    let mut region = Aabb::empty();
    region.expand(eye);
    for &i in &candidates {
        region.expand(map.landmarks[i].position);
    }
    let occluders: Vec<(Segment, Aabb)> = map
        .walls
        .iter()
        .map(|w| (*w, w.bbox()))
        .filter(|(_, bb)| bb.overlaps(&region))
        .collect();

    let mut kept = Vec::with_capacity(candidates.len());
    for i in candidates {
        let target = map.landmarks[i].position;
        let sight = Aabb::from_points(eye, target);
        let blocked = occluders
            .iter()
            .any(|(w, bb)| bb.overlaps(&sight) && sight_blocked(eye, target, w));
        if !blocked {
            kept.push(i);
            if kept.len() >= limit {
                return (kept, true);
            }
        }
    }
    (kept, false)
}

/// Co-visible count between `visible_from` (indices visible from some first
/// pose) and `pose`, capped at [`OVERLAP_CAP`].
pub fn overlap_with(map: &WorldMap, cam: &CameraModel, visible_from: &[usize], pose: &Pose) -> u32 {
    let heading = pose.heading();
    let in_cone = visible_from
        .iter()
        .copied()
        .filter(|&i| cam.in_cone(pose, heading, map.landmarks[i].position));
    let (kept, _) = filter_unoccluded(map, pose.position(), in_cone, OVERLAP_CAP as usize);
    kept.len() as u32
}

/// `min(600, |visible_set(p1) ∩ visible_set(p2)|)`.
pub fn fov_overlap(map: &WorldMap, cam: &CameraModel, p1: &Pose, p2: &Pose) -> u32 {
    let v1 = visible_indices(map, cam, p1);
    overlap_with(map, cam, &v1, p2)
}

/// One unicycle step: rotate by `dtheta`, translate `dist` along (or against)
/// the new heading. Fails if the swept segment touches a wall or leaves the
/// map bounds.
pub fn step_kinematics(map: &WorldMap, p: &Pose, direction: Direction, dtheta: f64, dist: f64) -> Result<Pose> {
    if !(dist > 0.0) {
        return Err(Error::Range(format!("step length must be positive, got {dist}")));
    }
    let next = p.stepped(direction, dtheta, dist);
    let swept = Segment::new(p.position(), next.position());
    if let Some(wall) = map.first_collision(&swept) {
        return Err(Error::Collision { x: p.x, y: p.y, wall });
    }
    if !map.bounds.contains(next.position()) {
        return Err(Error::Collision {
            x: p.x,
            y: p.y,
            wall: usize::MAX,
        });
    }
    Ok(next)
}
