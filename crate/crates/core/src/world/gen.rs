//! Seeded map generator: corridors, rooms, corners and mixed layouts.
//!
//! Corridor-like maps are built from a centerline polyline offset to both
//! sides; landmarks are strewn along walls at a fixed density and pushed a
//! few millimetres off the surface into free space.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Bounds, Landmark, Pose, Segment, Vec2, WorldMap};
use crate::error::Error;
use crate::rng::{stream, StreamRng};

/// Landmarks sit this far in front of their wall.
const SURFACE_OFFSET: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapStyle {
    Corridor,
    Room,
    Corner,
    Mixed,
}

impl MapStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            MapStyle::Corridor => "corridor",
            MapStyle::Room => "room",
            MapStyle::Corner => "corner",
            MapStyle::Mixed => "mixed",
        }
    }
}

impl FromStr for MapStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "corridor" => Ok(MapStyle::Corridor),
            "room" => Ok(MapStyle::Room),
            "corner" => Ok(MapStyle::Corner),
            "mixed" => Ok(MapStyle::Mixed),
            other => Err(Error::Config(format!("unknown map style '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureProfile {
    /// Landmarks per meter of textured wall.
    pub density: f64,
    /// Add low-texture (landmark-free) wall stretches.
    pub low_texture: bool,
    /// Length of each low-texture stretch, meters.
    pub low_texture_len: f64,
}

impl Default for TextureProfile {
    fn default() -> Self {
        Self {
            density: 120.0,
            low_texture: true,
            low_texture_len: 3.0,
        }
    }
}

impl TextureProfile {
    pub fn uniform(density: f64) -> Self {
        Self {
            density,
            low_texture: false,
            low_texture_len: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedMap {
    pub map: WorldMap,
    /// Nominal route from start to goal (corridor centerline or room diagonal).
    pub route: Vec<Vec2>,
    /// Total length of wall carrying landmarks.
    pub textured_length: f64,
    /// Number of wall pieces carrying landmarks.
    pub textured_pieces: usize,
}

struct WallBuilder {
    walls: Vec<Segment>,
    landmarks: Vec<Landmark>,
    textured_length: f64,
    textured_pieces: usize,
    density: f64,
}

impl WallBuilder {
    fn new(density: f64) -> Self {
        Self {
            walls: Vec::new(),
            landmarks: Vec::new(),
            textured_length: 0.0,
            textured_pieces: 0,
            density,
        }
    }

    /// Adds a wall whose free side faces `normal`. `blank` marks stretches
    /// (as fractions of the wall, ascending) that get no landmarks; the wall
    /// is split at their edges.
    fn wall(&mut self, a: Vec2, b: Vec2, normal: Vec2, blank: &[(f64, f64)], rng: &mut StreamRng) {
        let mut cuts = vec![(0.0, false)];
        for &(s, e) in blank {
            let (s, e) = (s.clamp(0.0, 1.0), e.clamp(0.0, 1.0));
            if e > s {
                cuts.push((s, true));
                cuts.push((e, false));
            }
        }
        cuts.push((1.0, false));
        for w in cuts.windows(2) {
            let (s0, is_blank) = w[0];
            let (s1, _) = w[1];
            if s1 - s0 <= 1e-9 {
                continue;
            }
            let pa = a + (b - a) * s0;
            let pb = a + (b - a) * s1;
            self.walls.push(Segment::new(pa, pb));
            if !is_blank {
                self.scatter(pa, pb, normal, rng);
            }
        }
    }

    fn scatter(&mut self, a: Vec2, b: Vec2, normal: Vec2, rng: &mut StreamRng) {
        let len = a.dist(b);
        let count = (len * self.density).floor() as usize;
        if count == 0 {
            return;
        }
        self.textured_length += len;
        self.textured_pieces += 1;
        let normal = normal.normalized();
        for k in 0..count {
            let s = (k as f64 + rng.gen_range(0.1..0.9)) / count as f64;
            let id = self.landmarks.len() as u32;
            self.landmarks.push(Landmark {
                id,
                position: a + (b - a) * s + normal * SURFACE_OFFSET,
                normal,
                scale: rng.gen_range(0.5..2.0),
            });
        }
    }

    fn finish(self, name: String, start: Pose, goal: Vec2, route: Vec<Vec2>) -> GeneratedMap {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for w in &self.walls {
            for p in [w.a, w.b] {
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        let map = WorldMap {
            name,
            bounds: Bounds {
                xmin: round_mm(lo.x - 0.5),
                ymin: round_mm(lo.y - 0.5),
                xmax: round_mm(hi.x + 0.5),
                ymax: round_mm(hi.y + 0.5),
            },
            walls: self.walls,
            landmarks: self.landmarks,
            start,
            goal,
        };
        GeneratedMap {
            map,
            route,
            textured_length: self.textured_length,
            textured_pieces: self.textured_pieces,
        }
    }
}

fn round_mm(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Builds a corridor of `width` around `centerline`. `blank_outer[i]`
/// requests a low-texture stretch of `blank_len` on the outside wall just
/// before turn `i` (the wall the camera faces while turning).
fn corridor(
    builder: &mut WallBuilder,
    centerline: &[Vec2],
    width: f64,
    blank_outer: &[bool],
    blank_len: f64,
    rng: &mut StreamRng,
) {
    let n = centerline.len();
    let dirs: Vec<Vec2> = centerline.windows(2).map(|w| (w[1] - w[0]).normalized()).collect();
    let half = width / 2.0;
    // miter offsets at every vertex
    let offsets: Vec<Vec2> = (0..n)
        .map(|i| {
            let n_prev = dirs[i.saturating_sub(1)].perp();
            let n_next = dirs[i.min(n - 2)].perp();
            let m = (n_prev + n_next).normalized();
            m * (half / m.dot(n_next))
        })
        .collect();
    let left: Vec<Vec2> = (0..n).map(|i| centerline[i] + offsets[i]).collect();
    let right: Vec<Vec2> = (0..n).map(|i| centerline[i] - offsets[i]).collect();

    for i in 0..n - 1 {
        let d = dirs[i];
        // turn at the end of this leg: positive = left turn, so the right wall is outside
        let turn = if i + 1 < n - 1 { d.cross(dirs[i + 1]) } else { 0.0 };
        let wants_blank = i < blank_outer.len() && blank_outer[i];
        let blank_for = |a: Vec2, b: Vec2| -> Vec<(f64, f64)> {
            let len = a.dist(b);
            if len <= 0.0 {
                return vec![];
            }
            vec![((len - blank_len) / len, 1.0)]
        };
        let left_blank = if wants_blank && turn < 0.0 { blank_for(left[i], left[i + 1]) } else { vec![] };
        let right_blank = if wants_blank && turn > 0.0 { blank_for(right[i], right[i + 1]) } else { vec![] };
        builder.wall(left[i], left[i + 1], -d.perp(), &left_blank, rng);
        builder.wall(right[i], right[i + 1], d.perp(), &right_blank, rng);
    }
    builder.wall(right[0], left[0], dirs[0], &[], rng);
    builder.wall(left[n - 1], right[n - 1], -dirs[n - 2], &[], rng);
}

fn centerline_from_legs(legs: &[(f64, f64)], heading0: f64) -> Vec<Vec2> {
    let mut pts = vec![Vec2::ZERO];
    let mut heading = heading0;
    for &(turn, len) in legs {
        heading += turn;
        let last = *pts.last().unwrap();
        pts.push(last + Vec2::from_angle(heading) * len);
    }
    pts.iter().map(|p| Vec2::new(round_mm(p.x), round_mm(p.y))).collect()
}

fn corridor_map(
    name: String,
    legs: &[(f64, f64)],
    width: f64,
    blank_outer: &[bool],
    texture: &TextureProfile,
    rng: &mut StreamRng,
) -> GeneratedMap {
    let centerline = centerline_from_legs(legs, 0.0);
    let mut builder = WallBuilder::new(texture.density);
    corridor(&mut builder, &centerline, width, blank_outer, texture.low_texture_len, rng);
    let d0 = (centerline[1] - centerline[0]).normalized();
    let n = centerline.len();
    let dl = (centerline[n - 1] - centerline[n - 2]).normalized();
    let start_pos = centerline[0] + d0 * 1.5;
    let goal = centerline[n - 1] - dl * 1.5;
    let mut route = centerline.clone();
    route[0] = start_pos;
    route[n - 1] = goal;
    builder.finish(name, Pose::at(start_pos, d0.angle()), goal, route)
}

fn room_map(name: String, texture: &TextureProfile, rng: &mut StreamRng) -> GeneratedMap {
    let w = rng.gen_range(10.0..14.0f64).round();
    let h = rng.gen_range(8.0..11.0f64).round();
    let mut builder = WallBuilder::new(texture.density);
    let corners = [Vec2::new(0.0, 0.0), Vec2::new(w, 0.0), Vec2::new(w, h), Vec2::new(0.0, h)];
    let blank_wall = if texture.low_texture { rng.gen_range(0..4) } else { usize::MAX };
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let inward = (b - a).perp();
        let blank = if i == blank_wall {
            let len = a.dist(b);
            let s = rng.gen_range(0.2..0.5);
            vec![(s, s + texture.low_texture_len / len)]
        } else {
            vec![]
        };
        builder.wall(a, b, inward, &blank, rng);
    }
    // square pillar in the middle, faces pointing outward
    let c = Vec2::new(w / 2.0 + rng.gen_range(-1.0..1.0f64).round() * 0.5, h / 2.0);
    let s = 1.0;
    let pillar = [
        c + Vec2::new(-s, -s),
        c + Vec2::new(-s, s),
        c + Vec2::new(s, s),
        c + Vec2::new(s, -s),
    ];
    for i in 0..4 {
        let a = pillar[i];
        let b = pillar[(i + 1) % 4];
        let outward = (b - a).perp();
        builder.wall(a, b, outward, &[], rng);
    }
    let start_pos = Vec2::new(1.5, 1.5);
    let goal = Vec2::new(w - 1.5, h - 1.5);
    let heading = (goal - start_pos).angle();
    let route = vec![start_pos, goal];
    builder.finish(name, Pose::at(start_pos, heading), goal, route)
}

/// Generates a map of the given style. Identical inputs give identical maps.
pub fn generate(seed: u64, style: MapStyle, texture: &TextureProfile) -> GeneratedMap {
    let mut rng = stream(seed, &["genmap".into(), style.as_str().into()]);
    let name = format!("{}-{}", style.as_str(), seed);
    match style {
        MapStyle::Corridor => {
            let len = rng.gen_range(14.0..20.0f64).round();
            let width = rng.gen_range(3.5..4.5f64);
            let mut tex = *texture;
            tex.low_texture = false;
            corridor_map(name, &[(0.0, len)], width, &[], &tex, &mut rng)
        }
        MapStyle::Corner => {
            let turns = rng.gen_range(2..=3usize);
            // wide enough that gentle 1 m steps can still round a corner
            let width = rng.gen_range(6.0..7.0f64);
            let mut legs = vec![(0.0, rng.gen_range(8.0..11.0f64).round())];
            let mut heading: f64 = 0.0;
            for _ in 0..turns {
                let mut sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let angle = rng.gen_range(60.0..=90.0f64).round().to_radians();
                // staircase rather than fold back
                if (heading + sign * angle).abs() > PI * 0.6 {
                    sign = -sign;
                }
                heading += sign * angle;
                legs.push((sign * angle, rng.gen_range(8.0..11.0f64).round()));
            }
            // every turn gets a blank stretch on its outer wall
            let blank = vec![true; turns];
            let mut tex = *texture;
            tex.low_texture = true;
            if tex.low_texture_len <= 0.0 {
                tex.low_texture_len = TextureProfile::default().low_texture_len;
            }
            corridor_map(name, &legs, width, &blank, &tex, &mut rng)
        }
        MapStyle::Room => room_map(name, texture, &mut rng),
        MapStyle::Mixed => {
            let n_legs = rng.gen_range(2..=4usize);
            let width = rng.gen_range(3.5..4.5f64);
            let mut legs = vec![(0.0, rng.gen_range(6.0..10.0f64).round())];
            let mut blank = Vec::new();
            for _ in 1..n_legs {
                let angle = rng.gen_range(-80.0..80.0f64).round().to_radians();
                legs.push((angle, rng.gen_range(6.0..10.0f64).round()));
                blank.push(texture.low_texture && rng.gen_bool(0.5));
            }
            // keep legs from folding back onto themselves
            let mut heading: f64 = 0.0;
            for leg in legs.iter_mut() {
                let next = heading + leg.0;
                if next.abs() > PI * 0.6 {
                    leg.0 = -leg.0;
                }
                heading += leg.0;
            }
            corridor_map(name, &legs, width, &blank, texture, &mut rng)
        }
    }
}

/// Heading changes along a route, radians (unsigned).
pub fn route_turns(route: &[Vec2]) -> Vec<f64> {
    route
        .windows(3)
        .map(|w| {
            let a = (w[1] - w[0]).angle();
            let b = (w[2] - w[1]).angle();
            super::normalize_angle(b - a).abs()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::map_to_json;

    #[test]
    fn same_seed_same_bytes() {
        let t = TextureProfile::default();
        for style in [MapStyle::Corridor, MapStyle::Room, MapStyle::Corner, MapStyle::Mixed] {
            let a = map_to_json(&generate(42, style, &t).map).unwrap();
            let b = map_to_json(&generate(42, style, &t).map).unwrap();
            assert_eq!(a, b);
            let c = map_to_json(&generate(43, style, &t).map).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn generated_maps_are_valid() {
        let t = TextureProfile::default();
        for seed in 0..12 {
            for style in [MapStyle::Corridor, MapStyle::Room, MapStyle::Corner, MapStyle::Mixed] {
                let g = generate(seed, style, &t);
                g.map.validate().unwrap_or_else(|e| panic!("{style:?} seed {seed}: {e}"));
                assert!(g.map.clearance(g.map.start.position()) > 1.0);
                assert!(g.map.clearance(g.map.goal) > 1.0);
            }
        }
    }

    #[test]
    fn corridor_route_is_straight() {
        for seed in 0..10 {
            let g = generate(seed, MapStyle::Corridor, &TextureProfile::default());
            assert!(route_turns(&g.route).iter().all(|t| t.to_degrees() <= 10.0));
        }
    }

    #[test]
    fn corner_has_sharp_turn_and_blank_stretch() {
        for seed in 0..10 {
            let g = generate(seed, MapStyle::Corner, &TextureProfile::default());
            assert!(route_turns(&g.route).iter().any(|t| t.to_degrees() >= 60.0 - 1e-9));
            // some wall longer than a metre carries no landmark away from its ends
            let bare = g.map.walls.iter().any(|w| {
                let inset = (w.b - w.a).normalized() * 0.05;
                let core = Segment::new(w.a + inset, w.b - inset);
                w.length() >= 1.0 && !g.map.landmarks.iter().any(|l| core.distance_to_point(l.position) < 0.01)
            });
            assert!(bare, "seed {seed}");
        }
    }

    #[test]
    fn mixed_landmark_census_within_density_bounds() {
        let t = TextureProfile {
            density: 40.0,
            ..TextureProfile::default()
        };
        for seed in 0..10 {
            let g = generate(seed, MapStyle::Mixed, &t);
            let count = g.map.landmarks.len() as f64;
            let upper = t.density * g.textured_length;
            let lower = upper - g.textured_pieces as f64;
            assert!(count <= upper + 1e-9 && count >= lower - 1e-9, "{count} vs [{lower}, {upper}]");
            assert!(count <= t.density * g.map.total_wall_length());
        }
    }
}
