//! Comparison policies and the common safety interface the planner consumes.

mod nbv;
mod svm;

pub use nbv::{nbv_quality, NbvQualityModel};
pub use svm::{
    feature_vector, svm_train, svm_train_points, KernelClassifier, SupportVector, SvmConfig, SVM_SCHEMA, SVM_VERSION,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::{discretize, StateActionFeatures};
use crate::filter::{is_safe_cell, FilterConfig};
use crate::qlearn::QTable;
use crate::world::{CameraModel, Pose, WorldMap};

/// Default co-visibility cutoff of the overlap-only rule.
pub const DEFAULT_OVERLAP_CUTOFF: u32 = 150;
/// Default quality cutoff of the NBV rule.
pub const DEFAULT_NBV_Q_MIN: f64 = 0.2;

pub fn overlap_only_safe(f: &StateActionFeatures, cutoff: u32) -> bool {
    f.overlap >= cutoff
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Naive,
    Rl,
    Svm,
    Overlap,
    Nbv,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Naive,
        PolicyKind::Rl,
        PolicyKind::Svm,
        PolicyKind::Overlap,
        PolicyKind::Nbv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Naive => "naive",
            PolicyKind::Rl => "rl",
            PolicyKind::Svm => "svm",
            PolicyKind::Overlap => "overlap",
            PolicyKind::Nbv => "nbv",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy '{s}' (expected naive, rl, svm, overlap or nbv)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub safe: bool,
    /// Policy-specific score: Q value, classifier margin, overlap or quality.
    pub score: f64,
}

/// A step-safety policy. `Naive` accepts everything.
#[derive(Debug, Clone)]
pub enum Policy {
    Naive,
    Rl { q: QTable, filter: FilterConfig },
    Svm(KernelClassifier),
    Overlap { cutoff: u32 },
    Nbv { model: NbvQualityModel, q_min: f64 },
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Naive => PolicyKind::Naive,
            Policy::Rl { .. } => PolicyKind::Rl,
            Policy::Svm(_) => PolicyKind::Svm,
            Policy::Overlap { .. } => PolicyKind::Overlap,
            Policy::Nbv { .. } => PolicyKind::Nbv,
        }
    }

    /// Verdict on the step `from → to` whose features are `f`.
    pub fn judge(&self, map: &WorldMap, cam: &CameraModel, from: &Pose, to: &Pose, f: &StateActionFeatures) -> Verdict {
        match self {
            Policy::Naive => Verdict { safe: true, score: 0.0 },
            Policy::Rl { q, filter } => {
                let cell = discretize(f);
                Verdict {
                    safe: is_safe_cell(q, filter, cell),
                    score: q.value(cell),
                }
            }
            Policy::Svm(clf) => {
                let margin = clf.decision(&feature_vector(f));
                Verdict {
                    safe: margin >= 0.0,
                    score: margin,
                }
            }
            Policy::Overlap { cutoff } => Verdict {
                safe: overlap_only_safe(f, *cutoff),
                score: f.overlap as f64,
            },
            Policy::Nbv { model, q_min } => {
                let quality = nbv_quality(model, map, cam, from, to);
                Verdict {
                    safe: quality >= *q_min,
                    score: quality,
                }
            }
        }
    }
}
