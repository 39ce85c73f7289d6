//! State-action parametrization of a candidate step: travel direction,
//! unsigned heading change and co-visible landmark count, plus the lookup
//! table cell they fall into.

use serde::{Deserialize, Serialize};

use crate::world::{normalize_angle, overlap_with, visible_indices, CameraModel, Direction, Pose, WorldMap, OVERLAP_CAP};

/// Largest heading change the table represents, degrees.
pub const MAX_DTHETA_DEG: f64 = 30.0;
/// Largest heading change a proposed step may carry, degrees.
pub const PROPOSAL_CAP_DEG: f64 = 27.0;

pub const ANGLE_BINS: usize = 20;
pub const OVERLAP_BINS: usize = 20;
pub const ANGLE_BIN_WIDTH: f64 = MAX_DTHETA_DEG / ANGLE_BINS as f64;
pub const OVERLAP_BIN_WIDTH: u32 = OVERLAP_CAP / OVERLAP_BINS as u32;
pub const NUM_CELLS: usize = 2 * ANGLE_BINS * OVERLAP_BINS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateActionFeatures {
    pub eta: Direction,
    /// Absolute heading change, degrees in [0, 30].
    pub dtheta_deg: f64,
    /// Co-visible landmarks, [0, 600].
    pub overlap: u32,
}

impl StateActionFeatures {
    pub fn new(eta: Direction, dtheta_deg: f64, overlap: u32) -> Self {
        Self {
            eta,
            dtheta_deg: dtheta_deg.abs().min(MAX_DTHETA_DEG),
            overlap: overlap.min(OVERLAP_CAP),
        }
    }

    pub fn in_range(&self) -> bool {
        (0.0..=MAX_DTHETA_DEG).contains(&self.dtheta_deg) && self.overlap <= OVERLAP_CAP
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub eta_bin: u8,
    pub angle_bin: u8,
    pub overlap_bin: u8,
}

impl CellIndex {
    /// Row-major position in a flat 800-entry table: direction, angle, overlap.
    pub fn linear(&self) -> usize {
        (self.eta_bin as usize * ANGLE_BINS + self.angle_bin as usize) * OVERLAP_BINS + self.overlap_bin as usize
    }

    pub fn from_linear(i: usize) -> Self {
        assert!(i < NUM_CELLS, "cell index {i} out of range");
        Self {
            eta_bin: (i / (ANGLE_BINS * OVERLAP_BINS)) as u8,
            angle_bin: ((i / OVERLAP_BINS) % ANGLE_BINS) as u8,
            overlap_bin: (i % OVERLAP_BINS) as u8,
        }
    }

    pub fn all() -> impl Iterator<Item = CellIndex> {
        (0..NUM_CELLS).map(CellIndex::from_linear)
    }
}

/// Features of a step between two poses. `overlap` is computed fresh;
/// use [`featurize_with`] when the visible set of `p_from` is already known.
pub fn featurize(map: &WorldMap, cam: &CameraModel, p_from: &Pose, p_to: &Pose, direction: Direction) -> StateActionFeatures {
    let visible = visible_indices(map, cam, p_from);
    featurize_with(map, cam, &visible, p_from, p_to, direction)
}

pub fn featurize_with(
    map: &WorldMap,
    cam: &CameraModel,
    visible_from: &[usize],
    p_from: &Pose,
    p_to: &Pose,
    direction: Direction,
) -> StateActionFeatures {
    let dtheta = normalize_angle(p_to.theta - p_from.theta).to_degrees();
    StateActionFeatures::new(direction, dtheta, overlap_with(map, cam, visible_from, p_to))
}

/// Lookup-table cell of a feature triple. Interior edges belong to the
/// upper bin; 30° and 600 fall into the last bins.
pub fn discretize(f: &StateActionFeatures) -> CellIndex {
    let eta_bin = match f.eta {
        Direction::Forward => 0,
        Direction::Backward => 1,
    };
    let angle_bin = ((f.dtheta_deg / ANGLE_BIN_WIDTH).floor().max(0.0) as usize).min(ANGLE_BINS - 1);
    let overlap_bin = ((f.overlap / OVERLAP_BIN_WIDTH) as usize).min(OVERLAP_BINS - 1);
    CellIndex {
        eta_bin,
        angle_bin: angle_bin as u8,
        overlap_bin: overlap_bin as u8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(eta: Direction, d: f64, ov: u32) -> (u8, u8, u8) {
        let c = discretize(&StateActionFeatures::new(eta, d, ov));
        (c.eta_bin, c.angle_bin, c.overlap_bin)
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(cell(Direction::Forward, 0.0, 0), (0, 0, 0));
        assert_eq!(cell(Direction::Backward, 30.0, 600), (1, 19, 19));
        assert_eq!(cell(Direction::Forward, 16.0, 300), (0, 10, 10));
    }

    #[test]
    fn edges_join_upper_bin() {
        assert_eq!(cell(Direction::Forward, 1.5, 30).1, 1);
        assert_eq!(cell(Direction::Forward, 1.5, 30).2, 1);
        assert_eq!(cell(Direction::Forward, 1.4999, 29).1, 0);
        assert_eq!(cell(Direction::Forward, 27.0, 0).1, 18);
        assert_eq!(cell(Direction::Forward, 28.5, 570).1, 19);
        assert_eq!(cell(Direction::Forward, 28.5, 570).2, 19);
    }

    #[test]
    fn features_clamp_and_take_magnitude() {
        let f = StateActionFeatures::new(Direction::Forward, -12.0, 10);
        assert_eq!(f.dtheta_deg, 12.0);
        let f = StateActionFeatures::new(Direction::Forward, 35.0, 700);
        assert_eq!(f.dtheta_deg, 30.0);
        assert_eq!(f.overlap, 600);
    }

    #[test]
    fn linear_index_round_trips() {
        let mut seen = vec![false; NUM_CELLS];
        for c in CellIndex::all() {
            assert_eq!(CellIndex::from_linear(c.linear()), c);
            seen[c.linear()] = true;
        }
        assert!(seen.into_iter().all(|s| s));
    }

    proptest! {
        #[test]
        fn every_in_range_triple_maps_to_a_valid_cell(back in any::<bool>(), d in 0.0..=30.0f64, ov in 0u32..=600) {
            let eta = if back { Direction::Backward } else { Direction::Forward };
            let c = discretize(&StateActionFeatures::new(eta, d, ov));
            prop_assert!((c.angle_bin as usize) < ANGLE_BINS);
            prop_assert!((c.overlap_bin as usize) < OVERLAP_BINS);
            prop_assert!(c.linear() < NUM_CELLS);
            prop_assert_eq!(c.eta_bin, back as u8);
        }
    }
}
