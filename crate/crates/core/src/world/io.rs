//! Map file format.
//!
//! ```json
//! {
//!   "version": 1,
//!   "name": "corner-7",
//!   "bounds": {"xmin": -1.0, "ymin": -1.0, "xmax": 20.0, "ymax": 12.0},
//!   "walls": [[x1, y1, x2, y2], ...],
//!   "landmarks": [{"id": 0, "x": 1.0, "y": 2.0, "nx": 0.0, "ny": -1.0, "scale": 1.3}, ...],
//!   "start": {"x": 0.0, "y": 0.0, "theta": 0.0},
//!   "goal": {"x": 18.0, "y": 10.0}
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bounds, Landmark, Pose, Segment, Vec2, WorldMap};
use crate::error::{Error, Result};

pub const MAP_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MapFile {
    version: Option<u32>,
    name: String,
    bounds: BoundsFile,
    walls: Vec<[f64; 4]>,
    landmarks: Vec<LandmarkFile>,
    start: StartFile,
    goal: GoalFile,
}

#[derive(Serialize, Deserialize)]
struct BoundsFile {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
}

#[derive(Serialize, Deserialize)]
struct LandmarkFile {
    id: u32,
    x: f64,
    y: f64,
    nx: f64,
    ny: f64,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
struct StartFile {
    x: f64,
    y: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct GoalFile {
    x: f64,
    y: f64,
}

pub fn map_to_json(map: &WorldMap) -> Result<String> {
    let file = MapFile {
        version: Some(MAP_SCHEMA_VERSION),
        name: map.name.clone(),
        bounds: BoundsFile {
            xmin: map.bounds.xmin,
            ymin: map.bounds.ymin,
            xmax: map.bounds.xmax,
            ymax: map.bounds.ymax,
        },
        walls: map.walls.iter().map(|w| [w.a.x, w.a.y, w.b.x, w.b.y]).collect(),
        landmarks: map
            .landmarks
            .iter()
            .map(|l| LandmarkFile {
                id: l.id,
                x: l.position.x,
                y: l.position.y,
                nx: l.normal.x,
                ny: l.normal.y,
                scale: l.scale,
            })
            .collect(),
        start: StartFile {
            x: map.start.x,
            y: map.start.y,
            theta: map.start.theta,
        },
        goal: GoalFile {
            x: map.goal.x,
            y: map.goal.y,
        },
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn map_from_json(text: &str) -> Result<WorldMap> {
    let file: MapFile = serde_json::from_str(text)?;
    match file.version {
        Some(MAP_SCHEMA_VERSION) => {}
        Some(v) => return Err(Error::Format(format!("unsupported map version {v}"))),
        None => return Err(Error::Format("map file has no version field".into())),
    }
    let map = WorldMap {
        name: file.name,
        bounds: Bounds {
            xmin: file.bounds.xmin,
            ymin: file.bounds.ymin,
            xmax: file.bounds.xmax,
            ymax: file.bounds.ymax,
        },
        walls: file
            .walls
            .iter()
            .map(|w| Segment::new(Vec2::new(w[0], w[1]), Vec2::new(w[2], w[3])))
            .collect(),
        landmarks: file
            .landmarks
            .iter()
            .map(|l| Landmark {
                id: l.id,
                position: Vec2::new(l.x, l.y),
                normal: Vec2::new(l.nx, l.ny),
                scale: l.scale,
            })
            .collect(),
        start: Pose::new(file.start.x, file.start.y, file.start.theta),
        goal: Vec2::new(file.goal.x, file.goal.y),
    };
    map.validate()?;
    Ok(map)
}

pub fn save_map(map: &WorldMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = map_to_json(map)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_map(path: impl AsRef<Path>) -> Result<WorldMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    map_from_json(&text)
}
