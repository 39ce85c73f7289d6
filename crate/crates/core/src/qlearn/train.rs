//! Episodic ε-greedy training on simulated random walks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{reward, EpsilonSchedule, Provenance, QTable, RewardWeights, DEFAULT_ALPHA, DEFAULT_GAMMA};
use crate::candidates::{admissible_candidates, Candidate};
use crate::error::{Error, Result};
use crate::features::{CellIndex, StateActionFeatures};
use crate::oracle::{breakage, BreakageModel};
use crate::rng::{stream, StreamRng};
use crate::world::{visible_indices, CameraModel, WorldMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub weights: RewardWeights,
    pub schedule: EpsilonSchedule,
    /// Episodes that survive this many steps are cut off (not breakage).
    pub episode_step_cap: usize,
    pub camera: CameraModel,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
            weights: RewardWeights::default(),
            schedule: EpsilonSchedule::default(),
            episode_step_cap: 500,
            camera: CameraModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalReason {
    Breakage,
    Cap,
    Stuck,
    Budget,
}

impl TerminalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalReason::Breakage => "breakage",
            TerminalReason::Cap => "cap",
            TerminalReason::Stuck => "stuck",
            TerminalReason::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    pub epsilon: f64,
    pub terminal_reason: TerminalReason,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub qtable: QTable,
    pub log: Vec<EpisodeRecord>,
    /// Every executed step's features and breakage outcome, in order.
    pub samples: Vec<(StateActionFeatures, bool)>,
}

/// Index of the greedy candidate: highest value, ties to the lowest cell
/// index, then uniformly among candidates sharing that cell.
pub(crate) fn greedy_index(q: &QTable, cands: &[Candidate], rng: &mut StreamRng) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for c in cands {
        let key = (q.value(c.cell), c.cell.linear());
        best = match best {
            None => Some(key),
            Some(b) if key.0 > b.0 || (key.0 == b.0 && key.1 < b.1) => Some(key),
            keep => keep,
        };
    }
    let Some((_, cell)) = best else { return 0 };
    let tied: Vec<usize> = cands
        .iter()
        .enumerate()
        .filter(|(_, c)| c.cell.linear() == cell)
        .map(|(i, _)| i)
        .collect();
    tied[if tied.len() == 1 { 0 } else { rng.gen_range(0..tied.len()) }]
}

/// Runs episodes over `maps` (round-robin) until `steps_budget` executed
/// steps. Each episode starts at its map's start pose and ends on breakage,
/// the per-episode cap, or when no admissible action remains.
pub fn train(
    maps: &[WorldMap],
    oracle: &BreakageModel,
    cfg: &TrainConfig,
    steps_budget: u64,
    seed: u64,
) -> Result<TrainOutcome> {
    if maps.is_empty() {
        return Err(Error::Config("training needs at least one map".into()));
    }
    let cam = &cfg.camera;
    // start-pose candidates are fixed per map; check them once
    let starts: Vec<(Vec<usize>, Vec<Candidate>)> = maps
        .iter()
        .map(|m| {
            let vis = visible_indices(m, cam, &m.start);
            let cands = admissible_candidates(m, cam, &m.start, &vis);
            (vis, cands)
        })
        .collect();
    if let Some(i) = starts.iter().position(|(_, c)| c.is_empty()) {
        return Err(Error::Config(format!("no admissible action at the start pose of map '{}'", maps[i].name)));
    }

    let mut q = QTable::new(cfg.alpha, cfg.gamma);
    q.provenance = Provenance {
        weights: cfg.weights,
        schedule: cfg.schedule,
        oracle: *oracle,
        seed,
        steps: 0,
        maps: maps.iter().map(|m| m.name.clone()).collect(),
    };
    let mut explore = stream(seed, &["train".into(), "explore".into()]);
    let mut draws = oracle.stream(&["train".into(), seed.into()]);
    let mut log = Vec::new();
    let mut samples = Vec::new();
    let mut steps = 0u64;
    let mut episode = 0usize;

    while steps < steps_budget {
        let map = &maps[episode % maps.len()];
        let epsilon = cfg.schedule.epsilon_at(episode);
        let mut cands = starts[episode % maps.len()].1.clone();
        let mut ep_steps = 0usize;
        let reason = loop {
            if steps >= steps_budget {
                break TerminalReason::Budget;
            }
            let pick = if explore.gen::<f64>() < epsilon {
                greedy_index(&q, &cands, &mut explore)
            } else {
                explore.gen_range(0..cands.len())
            };
            let chosen = cands[pick];
            let phi = breakage(oracle, &chosen.features, &mut draws)?;
            let r = reward(&cfg.weights, &chosen.features, phi);
            samples.push((chosen.features, phi));
            steps += 1;
            ep_steps += 1;
            if phi {
                q.q_update(chosen.cell, r, &[], true);
                break TerminalReason::Breakage;
            }
            let vis = visible_indices(map, cam, &chosen.to);
            cands = admissible_candidates(map, cam, &chosen.to, &vis);
            let next: Vec<CellIndex> = cands.iter().map(|c| c.cell).collect();
            q.q_update(chosen.cell, r, &next, false);
            if cands.is_empty() {
                break TerminalReason::Stuck;
            }
            if ep_steps >= cfg.episode_step_cap {
                break TerminalReason::Cap;
            }
        };
        if ep_steps > 0 {
            log.push(EpisodeRecord {
                episode,
                steps: ep_steps,
                epsilon,
                terminal_reason: reason,
            });
        }
        episode += 1;
    }
    q.provenance.steps = steps;
    Ok(TrainOutcome {
        qtable: q,
        log,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::gen::{generate, MapStyle, TextureProfile};

    #[test]
    fn zero_budget_leaves_table_empty() {
        let m = generate(1, MapStyle::Room, &TextureProfile::default()).map;
        let out = train(&[m], &BreakageModel::default(), &TrainConfig::default(), 0, 1).unwrap();
        assert!(out.log.is_empty());
        assert!(out.qtable.values().iter().all(|&v| v == 0.0));
        assert!(out.qtable.visit_counts().iter().all(|&v| v == 0));
    }

    #[test]
    fn no_maps_is_a_config_error() {
        assert!(matches!(
            train(&[], &BreakageModel::default(), &TrainConfig::default(), 10, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn visits_sum_to_steps_and_is_deterministic() {
        let m = generate(2, MapStyle::Room, &TextureProfile::default()).map;
        let run = || train(&[m.clone()], &BreakageModel::default(), &TrainConfig::default(), 600, 9).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a.qtable, b.qtable);
        assert_eq!(a.log, b.log);
        assert_eq!(a.qtable.visit_counts().iter().sum::<u64>(), 600);
        assert_eq!(a.log.iter().map(|e| e.steps as u64).sum::<u64>(), 600);
        assert_eq!(a.samples.len(), 600);
    }
}
