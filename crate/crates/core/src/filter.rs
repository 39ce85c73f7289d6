//! The action filter: a step is safe when its cell's learned value clears a
//! threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{discretize, CellIndex, StateActionFeatures};
use crate::qlearn::QTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Values at or above this are safe.
    pub threshold: f64,
    /// Cells visited fewer times than this are treated as unsafe.
    pub min_visits: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            threshold: -10.0,
            min_visits: 3,
        }
    }
}

impl FilterConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }
}

pub fn is_safe_cell(q: &QTable, cfg: &FilterConfig, cell: CellIndex) -> bool {
    q.visits(cell) >= cfg.min_visits && q.value(cell) >= cfg.threshold
}

pub fn is_safe(q: &QTable, cfg: &FilterConfig, f: &StateActionFeatures) -> bool {
    is_safe_cell(q, cfg, discretize(f))
}

/// Threshold minimizing false positives (breaking steps judged safe), then
/// false negatives, over every distinct cut of the logged values. The cut
/// between two adjacent values is reported as their midpoint; a cut above
/// every value is reported just above the largest.
pub fn choose_threshold(q: &QTable, labeled_log: &[(CellIndex, bool)]) -> Result<f64> {
    let breaks = labeled_log.iter().filter(|(_, phi)| *phi).count();
    if labeled_log.is_empty() || breaks == 0 || breaks == labeled_log.len() {
        return Err(Error::Degenerate("threshold selection needs both breaking and non-breaking steps".into()));
    }
    let mut entries: Vec<(f64, bool)> = labeled_log.iter().map(|&(c, phi)| (q.value(c), phi)).collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Sweep cuts from "everything safe" upward. Below the cut = unsafe.
    let mut fp = breaks;
    let mut fn_ = 0usize;
    let mut best = (fp, fn_, f64::NEG_INFINITY);
    let mut i = 0;
    while i < entries.len() {
        let v = entries[i].0;
        while i < entries.len() && entries[i].0 == v {
            if entries[i].1 {
                fp -= 1;
            } else {
                fn_ += 1;
            }
            i += 1;
        }
        let cut = match entries.get(i) {
            Some(&(next, _)) => 0.5 * (v + next),
            None => v.next_up(),
        };
        if (fp, fn_) < (best.0, best.1) {
            best = (fp, fn_, cut);
        }
    }
    Ok(best.2)
}
