//! Picks the cutoffs of the thresholded policies on training maps.

use serde::{Deserialize, Serialize};

use super::{build_policy, run_goal_trials, Artifacts, Thresholds};
use crate::baselines::PolicyKind;
use crate::error::Result;
use crate::filter::FilterConfig;
use crate::oracle::BreakageModel;
use crate::planner::{PlannerConfig, RunOutcome};
use crate::rng::derive_seed;
use crate::world::WorldMap;

pub const OVERLAP_GRID: [u32; 9] = [0, 50, 100, 150, 200, 250, 300, 350, 400];
pub const NBV_GRID: [f64; 8] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub policy: PolicyKind,
    pub cutoff: f64,
    pub success_pct: f64,
    pub breakages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub thresholds: Thresholds,
    pub grid: Vec<GridPoint>,
}

/// Candidate RL thresholds: deciles of the values of sufficiently visited
/// cells, plus the filter's default.
pub fn rl_grid(artifacts: &Artifacts) -> Vec<f64> {
    let default = FilterConfig::default();
    let Some(q) = &artifacts.qtable else { return vec![default.threshold] };
    let mut vals: Vec<f64> = q
        .values()
        .iter()
        .zip(q.visit_counts())
        .filter(|(_, &n)| n >= default.min_visits)
        .map(|(&v, _)| v)
        .collect();
    vals.sort_by(f64::total_cmp);
    let mut grid = vec![default.threshold];
    if !vals.is_empty() {
        for k in 1..10 {
            grid.push(vals[(k * (vals.len() - 1)) / 10]);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Grid search per thresholded policy in `kinds`, maximizing success on
/// `maps`; ties go to fewer breakages, then to the earlier grid point.
pub fn tune_thresholds(
    kinds: &[PolicyKind],
    maps: &[WorldMap],
    artifacts: &Artifacts,
    oracle: &BreakageModel,
    trials: usize,
    seed: u64,
    cfg: &PlannerConfig,
    base: Thresholds,
) -> Result<TuningResult> {
    let seed = derive_seed(seed, &["tune".into()]);
    let mut out = base;
    let mut grid = Vec::new();
    for &kind in kinds {
        let cands: Vec<f64> = match kind {
            PolicyKind::Rl => rl_grid(artifacts),
            PolicyKind::Overlap => OVERLAP_GRID.iter().map(|&c| f64::from(c)).collect(),
            PolicyKind::Nbv => NBV_GRID.to_vec(),
            _ => continue,
        };
        let mut best: Option<GridPoint> = None;
        for c in cands {
            let mut t = base;
            match kind {
                PolicyKind::Rl => t.rl = c,
                PolicyKind::Overlap => t.overlap = c as u32,
                _ => t.nbv = c,
            }
            let policy = build_policy(kind, artifacts, &t)?;
            let rows = run_goal_trials(maps, &[policy], oracle, trials, seed, cfg)?;
            let wins = rows.iter().filter(|r| r.outcome == RunOutcome::Success).count();
            let point = GridPoint {
                policy: kind,
                cutoff: c,
                success_pct: super::success_pct(wins, rows.len()),
                breakages: rows.iter().filter(|r| r.outcome == RunOutcome::Breakage).count(),
            };
            grid.push(point);
            let better = match best {
                None => true,
                Some(b) => point.success_pct > b.success_pct || (point.success_pct == b.success_pct && point.breakages < b.breakages),
            };
            if better {
                best = Some(point);
            }
        }
        if let Some(b) = best {
            match kind {
                PolicyKind::Rl => out.rl = b.cutoff,
                PolicyKind::Overlap => out.overlap = b.cutoff as u32,
                _ => out.nbv = b.cutoff,
            }
        }
    }
    Ok(TuningResult { thresholds: out, grid })
}
