//! Localization-quality score in the style of next-best-view planners:
//! geometric point quality (triangulation angle) times point recognition
//! probability (viewing angle and apparent scale).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{visible_indices, CameraModel, Landmark, Pose, Vec2, WorldMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbvQualityModel {
    /// Triangulation angle at which geometric quality saturates, radians.
    pub min_triangulation_angle: f64,
    /// Std-dev of the viewing-angle penalty, radians.
    pub falloff: f64,
    /// Apparent-scale ratio tolerated without penalty.
    pub scale_tolerance: f64,
}

impl Default for NbvQualityModel {
    fn default() -> Self {
        Self {
            min_triangulation_angle: 5f64.to_radians(),
            falloff: 20f64.to_radians(),
            scale_tolerance: 1.5,
        }
    }
}

impl NbvQualityModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_triangulation_angle > 0.0 && self.falloff > 0.0 && self.scale_tolerance > 1.0) {
            return Err(Error::Config(
                "nbv model needs positive angles and a scale tolerance above 1".into(),
            ));
        }
        Ok(())
    }

    /// Angle subtended at the landmark by the two camera centres.
    pub fn triangulation_angle(lm: &Landmark, a: Vec2, b: Vec2) -> f64 {
        let (u, v) = (a - lm.position, b - lm.position);
        if u.norm() < 1e-12 || v.norm() < 1e-12 {
            return 0.0;
        }
        u.cross(v).atan2(u.dot(v)).abs()
    }

    pub fn gpq(&self, lm: &Landmark, a: Vec2, b: Vec2) -> f64 {
        (Self::triangulation_angle(lm, a, b) / self.min_triangulation_angle).clamp(0.0, 1.0)
    }

    pub fn prp(&self, lm: &Landmark, seen_from: Vec2, now: Vec2) -> f64 {
        // unsigned incidence relative to the surface normal
        let incidence = |p: Vec2| {
            let d = p - lm.position;
            lm.normal.cross(d).atan2(lm.normal.dot(d)).abs()
        };
        let dv = incidence(now) - incidence(seen_from);
        let view = (-dv * dv / (2.0 * self.falloff * self.falloff)).exp();

        // apparent size is scale / distance; compare it across the two views
        let apparent = |p: Vec2| lm.scale / p.dist(lm.position).max(1e-9);
        let r = (apparent(now) / apparent(seen_from)).ln().abs();
        let tol = self.scale_tolerance.ln();
        let scale = if r <= tol { 1.0 } else { (-(r - tol).powi(2) / (2.0 * tol * tol)).exp() };
        view * scale
    }
}

/// Mean per-landmark quality over the landmarks visible from `p_next`;
/// zero when nothing is visible.
pub fn nbv_quality(model: &NbvQualityModel, map: &WorldMap, cam: &CameraModel, p_prev: &Pose, p_next: &Pose) -> f64 {
    let vis = visible_indices(map, cam, p_next);
    if vis.is_empty() {
        return 0.0;
    }
    let (a, b) = (p_prev.position(), p_next.position());
    let total: f64 = vis
        .iter()
        .map(|&i| {
            let lm = &map.landmarks[i];
            model.gpq(lm, a, b) * model.prp(lm, a, b)
        })
        .sum();
    total / vis.len() as f64
}
