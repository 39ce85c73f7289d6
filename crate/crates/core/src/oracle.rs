//! Synthetic monocular-SLAM breakage oracle.
//!
//! A step breaks tracking with probability
//! `logistic(b0 + b_overlap·(1 − overlap/600) + b_angle·(|Δθ|/27°))`,
//! drawn from a private, seeded stream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{StateActionFeatures, MAX_DTHETA_DEG, PROPOSAL_CAP_DEG};
use crate::rng::{stream, Label, StreamRng};
use crate::world::OVERLAP_CAP;

/// Default corner probabilities: best case (600 co-visible, no turn) and
/// worst proposal (nothing co-visible, 27° turn).
pub const DEFAULT_TARGET_LOW: f64 = 0.001;
pub const DEFAULT_TARGET_HIGH: f64 = 0.5;
/// Share of the logit span carried by the overlap term.
pub const DEFAULT_OVERLAP_SHARE: f64 = 0.2;

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakageModel {
    pub b0: f64,
    pub b_overlap: f64,
    pub b_angle: f64,
    pub rng_seed: u64,
}

impl Default for BreakageModel {
    fn default() -> Self {
        calibrate_with(DEFAULT_TARGET_LOW, DEFAULT_TARGET_HIGH, DEFAULT_OVERLAP_SHARE)
    }
}

impl BreakageModel {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Closed-form failure probability; no range checks.
    pub fn probability_unchecked(&self, dtheta_deg: f64, overlap: f64) -> f64 {
        let z = self.b0
            + self.b_overlap * (1.0 - overlap / OVERLAP_CAP as f64)
            + self.b_angle * (dtheta_deg.abs() / PROPOSAL_CAP_DEG);
        logistic(z)
    }

    pub fn probability(&self, f: &StateActionFeatures) -> Result<f64> {
        if !(f.dtheta_deg.abs() <= MAX_DTHETA_DEG) {
            return Err(Error::Range(format!("heading change {}° exceeds {MAX_DTHETA_DEG}°", f.dtheta_deg)));
        }
        if f.overlap > OVERLAP_CAP {
            return Err(Error::Range(format!("overlap {} exceeds {OVERLAP_CAP}", f.overlap)));
        }
        Ok(self.probability_unchecked(f.dtheta_deg, f.overlap as f64))
    }

    /// A private draw stream, identified by labels under this model's seed.
    pub fn stream(&self, labels: &[Label<'_>]) -> OracleStream {
        OracleStream {
            rng: stream(self.rng_seed, labels),
            calls: 0,
        }
    }
}

/// Seeded source of breakage draws; one uniform per query.
#[derive(Debug, Clone)]
pub struct OracleStream {
    rng: StreamRng,
    calls: u64,
}

impl OracleStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: stream(seed, &[]),
            calls: 0,
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }
}

/// Queries the oracle once for an executed step; returns `true` on breakage.
pub fn breakage(model: &BreakageModel, f: &StateActionFeatures, stream: &mut OracleStream) -> Result<bool> {
    let p = model.probability(f)?;
    stream.calls += 1;
    let u: f64 = stream.rng.gen();
    Ok(u < p)
}

/// Fits the model so that the best corner (600 co-visible, 0°) fails with
/// `target_low` and the worst proposal corner (0 co-visible, 27°) with
/// `target_high`, splitting the logit span evenly between both terms.
pub fn calibrate(target_low: f64, target_high: f64) -> BreakageModel {
    calibrate_with(target_low, target_high, 0.5)
}

/// As [`calibrate`], with `overlap_share` ∈ (0, 1) of the logit span given
/// to the overlap term and the rest to the angle term. Non-increasing
/// targets give a flat model at `logit(target_low)`.
pub fn calibrate_with(target_low: f64, target_high: f64, overlap_share: f64) -> BreakageModel {
    let b0 = logit(target_low);
    let span = logit(target_high) - b0;
    if !(span > 0.0) {
        return BreakageModel {
            b0,
            b_overlap: 0.0,
            b_angle: 0.0,
            rng_seed: 0,
        };
    }
    let share = overlap_share.clamp(1e-6, 1.0 - 1e-6);
    BreakageModel {
        b0,
        b_overlap: share * span,
        b_angle: (1.0 - share) * span,
        rng_seed: 0,
    }
}
