//! Proposal grid of one-step actions and their admissibility.

use crate::features::{discretize, featurize_with, CellIndex, StateActionFeatures};
use crate::world::{CameraModel, Direction, Pose, Segment, WorldMap};

/// Nominal step length, meters.
pub const STEP_LENGTH: f64 = 1.0;
/// Minimum distance the swept step keeps from every wall, meters.
pub const ROBOT_RADIUS: f64 = 0.25;
/// Heading-change magnitudes of the proposal grid, degrees.
pub const TURN_GRID_DEG: [f64; 7] = [0.0, 4.5, 9.0, 13.5, 18.0, 22.5, 27.0];

/// (direction, signed heading change in degrees) for every grid action,
/// in a fixed order.
pub fn action_grid() -> Vec<(Direction, f64)> {
    let mut out = Vec::with_capacity(26);
    for dir in [Direction::Forward, Direction::Backward] {
        for &d in &TURN_GRID_DEG {
            out.push((dir, d));
            if d > 0.0 {
                out.push((dir, -d));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub direction: Direction,
    /// Signed heading change, degrees.
    pub dtheta_deg: f64,
    pub to: Pose,
    pub features: StateActionFeatures,
    pub cell: CellIndex,
}

/// True when a straight move between the two poses stays inside the map
/// with `ROBOT_RADIUS` of clearance.
pub fn step_admissible(map: &WorldMap, from: &Pose, to: &Pose) -> bool {
    map.bounds.contains(to.position()) && map.segment_clear(&Segment::new(from.position(), to.position()), ROBOT_RADIUS)
}

/// Featurizes one proposed step. Returns `None` when inadmissible.
pub fn propose(
    map: &WorldMap,
    cam: &CameraModel,
    pose: &Pose,
    visible_from: &[usize],
    direction: Direction,
    dtheta_deg: f64,
    dist: f64,
) -> Option<Candidate> {
    let to = pose.stepped(direction, dtheta_deg.to_radians(), dist);
    if !step_admissible(map, pose, &to) {
        return None;
    }
    let features = featurize_with(map, cam, visible_from, pose, &to, direction);
    Some(Candidate {
        direction,
        dtheta_deg,
        to,
        features,
        cell: discretize(&features),
    })
}

/// All admissible grid actions from `pose`, in grid order.
pub fn admissible_candidates(map: &WorldMap, cam: &CameraModel, pose: &Pose, visible_from: &[usize]) -> Vec<Candidate> {
    action_grid()
        .into_iter()
        .filter_map(|(dir, d)| propose(map, cam, pose, visible_from, dir, d, STEP_LENGTH))
        .collect()
}
