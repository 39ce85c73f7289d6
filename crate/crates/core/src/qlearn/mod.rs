//! Tabular Q-learning over the 800 state-action cells.

mod io;
mod train;

pub(crate) use io::check_header;
pub use io::{load_qtable, qtable_from_json, qtable_to_json, save_qtable, write_training_log, QTABLE_SCHEMA, QTABLE_VERSION};
pub use train::{train, EpisodeRecord, TerminalReason, TrainConfig, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::features::{CellIndex, StateActionFeatures, NUM_CELLS};
use crate::oracle::BreakageModel;
use crate::world::OVERLAP_CAP;

pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Weights of the per-step reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    /// Constant term.
    pub w0: f64,
    /// Co-visible landmark weight.
    pub w1: f64,
    /// Heading change weight, per degree.
    pub w2: f64,
    /// Breakage weight.
    pub w3: f64,
    /// Use overlap/600 instead of the raw count in the overlap term.
    pub normalize_overlap: bool,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w0: -10.0,
            w1: 0.167,
            w2: -0.1,
            w3: -10.0,
            normalize_overlap: true,
        }
    }
}

impl RewardWeights {
    /// Smallest reward any in-range step can earn.
    pub fn min_reward(&self) -> f64 {
        let ov_max = if self.normalize_overlap { 1.0 } else { OVERLAP_CAP as f64 };
        let angle_max = crate::features::MAX_DTHETA_DEG;
        self.w0 + (self.w1 * ov_max).min(0.0) + (self.w2 * angle_max).min(0.0) + self.w3.min(0.0)
    }
}

pub fn reward(w: &RewardWeights, f: &StateActionFeatures, phi: bool) -> f64 {
    let overlap = if w.normalize_overlap {
        f.overlap as f64 / OVERLAP_CAP as f64
    } else {
        f.overlap as f64
    };
    let broke = if phi { 1.0 } else { 0.0 };
    w.w1 * overlap + w.w2 * f.dtheta_deg + w.w3 * broke + w.w0
}

/// Exploitation probability schedule: `initial + increment · ⌊episode / block_size⌋`,
/// capped at `ceiling`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub increment: f64,
    pub block_size: usize,
    pub ceiling: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            initial: 0.0,
            increment: 0.05,
            block_size: 20,
            ceiling: 0.9,
        }
    }
}

impl EpsilonSchedule {
    pub fn fixed(eps: f64) -> Self {
        Self {
            initial: eps,
            increment: 0.0,
            block_size: 1,
            ceiling: eps,
        }
    }

    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let blocks = (episode / self.block_size.max(1)) as f64;
        (self.initial + self.increment * blocks).min(self.ceiling)
    }
}

/// Training provenance stored alongside the table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub weights: RewardWeights,
    pub schedule: EpsilonSchedule,
    pub oracle: BreakageModel,
    pub seed: u64,
    pub steps: u64,
    pub maps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    visits: Vec<u64>,
    pub alpha: f64,
    pub gamma: f64,
    pub provenance: Provenance,
}

impl Default for QTable {
    fn default() -> Self {
        Self::new(DEFAULT_ALPHA, DEFAULT_GAMMA)
    }
}

impl QTable {
    pub fn new(alpha: f64, gamma: f64) -> Self {
        Self {
            values: vec![0.0; NUM_CELLS],
            visits: vec![0; NUM_CELLS],
            alpha,
            gamma,
            provenance: Provenance::default(),
        }
    }

    pub fn value(&self, cell: CellIndex) -> f64 {
        self.values[cell.linear()]
    }

    pub fn visits(&self, cell: CellIndex) -> u64 {
        self.visits[cell.linear()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visit_counts(&self) -> &[u64] {
        &self.visits
    }

    /// Overwrites a cell; the visit count is untouched.
    pub fn set_value(&mut self, cell: CellIndex, v: f64) {
        self.values[cell.linear()] = v;
    }

    pub fn set_visits(&mut self, cell: CellIndex, n: u64) {
        self.visits[cell.linear()] = n;
    }

    pub(crate) fn from_parts(values: Vec<f64>, visits: Vec<u64>, alpha: f64, gamma: f64, provenance: Provenance) -> Self {
        Self {
            values,
            visits,
            alpha,
            gamma,
            provenance,
        }
    }

    /// Largest value among `cells`; 0 when empty.
    pub fn max_value(&self, cells: &[CellIndex]) -> f64 {
        cells
            .iter()
            .map(|&c| self.value(c))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .unwrap_or(0.0)
    }

    /// One temporal-difference update:
    /// `Q ← Q + α(r + γ·M − Q)` with `M` the best value among the next
    /// state's admissible cells, or 0 when the episode terminated.
    pub fn q_update(&mut self, cell: CellIndex, r: f64, next_cells: &[CellIndex], terminal: bool) -> f64 {
        let m = if terminal { 0.0 } else { self.max_value(next_cells) };
        self.apply(cell, r, m)
    }

    /// The update with an explicit bootstrap value `m`.
    pub fn apply(&mut self, cell: CellIndex, r: f64, m: f64) -> f64 {
        let i = cell.linear();
        let old = self.values[i];
        let new = old + self.alpha * (r + self.gamma * m - old);
        self.values[i] = new;
        self.visits[i] += 1;
        new
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Direction;

    fn f(ov: u32, d: f64) -> StateActionFeatures {
        StateActionFeatures::new(Direction::Forward, d, ov)
    }

    #[test]
    fn reward_examples() {
        let w = RewardWeights::default();
        assert!((reward(&w, &f(600, 0.0), false) - (-9.833)).abs() < 1e-12);
        assert!((reward(&w, &f(0, 27.0), true) - (-22.7)).abs() < 1e-12);
        assert!((reward(&w, &f(300, 10.0), false) - (-10.9165)).abs() < 1e-12);
    }

    #[test]
    fn raw_overlap_variant() {
        let w = RewardWeights {
            normalize_overlap: false,
            ..RewardWeights::default()
        };
        assert!((reward(&w, &f(600, 0.0), false) - (0.167 * 600.0 - 10.0)).abs() < 1e-9);
    }

    #[test]
    fn min_reward_of_defaults() {
        assert!((RewardWeights::default().min_reward() - (-23.0)).abs() < 1e-12);
    }

    #[test]
    fn q_update_examples() {
        let c = CellIndex::from_linear(5);
        let other = CellIndex::from_linear(6);

        let mut q = QTable::new(0.2, 0.9);
        q.set_value(other, -9.833);
        let v = q.q_update(c, -10.9165, &[other], false);
        // 0.2·(−10.9165 + 0.9·(−9.833)) = 0.2·(−19.7662)
        assert!((v - (-3.95324)).abs() < 1e-12, "{v}");
        assert_eq!(q.visits(c), 1);

        let mut q = QTable::new(0.0, 0.9);
        q.set_value(c, -4.0);
        assert_eq!(q.q_update(c, -100.0, &[other], false), -4.0);
        assert_eq!(q.visits(c), 1);

        let mut q = QTable::new(0.5, 0.9);
        let v = q.q_update(c, -22.7, &[other], true);
        assert!((v - (-11.35)).abs() < 1e-12);
    }

    #[test]
    fn epsilon_schedule_steps_and_caps() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.epsilon_at(0), 0.0);
        assert_eq!(s.epsilon_at(19), 0.0);
        assert!((s.epsilon_at(20) - 0.05).abs() < 1e-12);
        assert!((s.epsilon_at(10_000) - 0.9).abs() < 1e-12);
        let mut prev = -1.0;
        for e in 0..2000 {
            let v = s.epsilon_at(e);
            assert!(v >= prev && v <= 0.9);
            prev = v;
        }
    }
}
