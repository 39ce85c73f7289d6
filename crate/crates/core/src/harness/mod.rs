//! Experiment orchestration: training runs, steps-to-breakage walks, the
//! goal-reaching trial matrix, cutoff tuning and CSV/plot-data export.

pub mod report;
mod tune;

pub use tune::{tune_thresholds, TuningResult};

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{svm_train, KernelClassifier, NbvQualityModel, Policy, PolicyKind, SvmConfig};
use crate::baselines::{DEFAULT_NBV_Q_MIN, DEFAULT_OVERLAP_CUTOFF};
use crate::candidates::admissible_candidates;
use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::oracle::{breakage, calibrate_with, BreakageModel, OracleStream};
use crate::oracle::{DEFAULT_OVERLAP_SHARE, DEFAULT_TARGET_HIGH, DEFAULT_TARGET_LOW};
use crate::planner::{run_safe_planner, PlannerConfig, RunOutcome, RunResult};
use crate::qlearn::{train, QTable, TrainConfig, TrainOutcome};
use crate::rng::{stream, StreamRng};
use crate::world::gen::{generate, MapStyle, TextureProfile};
use crate::world::{load_map, visible_indices, CameraModel, WorldMap};

/// Environment variable naming the root for relative output paths.
pub const OUTPUT_ROOT_ENV: &str = "SLAMSAFE_OUT";
pub const EXPERIMENT_VERSION: u32 = 1;

/// Resolves `p` against `$SLAMSAFE_OUT` when it is relative.
pub fn output_path(p: impl AsRef<Path>) -> PathBuf {
    let p = p.as_ref();
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if p.is_relative() => Path::new(&root).join(p),
        _ => p.to_path_buf(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    File { file: PathBuf },
    Generated { seed: u64, style: MapStyle },
}

impl MapSpec {
    /// `style:seed` (e.g. `corner:200`) or a path to a map file.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some((style, seed)) = s.split_once(':') {
            if let Ok(style) = style.parse::<MapStyle>() {
                let seed = seed
                    .parse()
                    .map_err(|_| Error::Config(format!("bad map seed in '{s}'")))?;
                return Ok(MapSpec::Generated { seed, style });
            }
        }
        Ok(MapSpec::File { file: PathBuf::from(s) })
    }

    pub fn load(&self, base: &Path) -> Result<WorldMap> {
        match self {
            MapSpec::File { file } => {
                let path = if file.is_relative() { base.join(file) } else { file.clone() };
                if !path.exists() {
                    return Err(Error::MissingArtifact(path));
                }
                load_map(&path)
            }
            MapSpec::Generated { seed, style } => Ok(generate(*seed, *style, &TextureProfile::default()).map),
        }
    }
}

/// Oracle calibration targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTargets {
    /// Breakage probability at full overlap and no turn.
    pub low: f64,
    /// Breakage probability at zero overlap and the largest turn.
    pub high: f64,
    /// Share of the logit span carried by the overlap term.
    pub overlap_share: f64,
}

impl Default for OracleTargets {
    fn default() -> Self {
        Self {
            low: DEFAULT_TARGET_LOW,
            high: DEFAULT_TARGET_HIGH,
            overlap_share: DEFAULT_OVERLAP_SHARE,
        }
    }
}

impl OracleTargets {
    pub fn model(&self, seed: u64) -> BreakageModel {
        calibrate_with(self.low, self.high, self.overlap_share).with_seed(seed)
    }
}

/// Safety cutoffs of the thresholded policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub rl: f64,
    pub overlap: u32,
    pub nbv: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            rl: FilterConfig::default().threshold,
            overlap: DEFAULT_OVERLAP_CUTOFF,
            nbv: DEFAULT_NBV_Q_MIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningSpec {
    pub maps: Vec<MapSpec>,
    #[serde(default = "default_tuning_trials")]
    pub trials: usize,
}

fn default_tuning_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub maps: Vec<MapSpec>,
    pub policies: Vec<PolicyKind>,
    #[serde(default = "default_trials")]
    pub trials_per_cell: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oracle: OracleTargets,
    pub output: PathBuf,
    #[serde(default)]
    pub qtable: Option<PathBuf>,
    #[serde(default)]
    pub svm: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// When present, cutoffs are tuned on these maps before evaluation.
    #[serde(default)]
    pub tuning: Option<TuningSpec>,
}

fn default_trials() -> usize {
    10
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        match v.get("version").and_then(serde_json::Value::as_u64) {
            Some(n) if n == u64::from(EXPERIMENT_VERSION) => {}
            Some(n) => return Err(Error::Format(format!("experiment version {n} does not match {EXPERIMENT_VERSION}"))),
            None => return Err(Error::Format("experiment config needs an integer version field".into())),
        }
        let cfg: Self = serde_json::from_value(v)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_cell == 0 {
            return Err(Error::Config("trials_per_cell must be at least 1".into()));
        }
        if self.maps.is_empty() || self.policies.is_empty() {
            return Err(Error::Config("experiment needs at least one map and one policy".into()));
        }
        Ok(())
    }
}

/// Trained artifacts a policy set may need.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub qtable: Option<QTable>,
    pub svm: Option<KernelClassifier>,
}

impl Artifacts {
    pub fn load(qtable: Option<&Path>, svm: Option<&Path>) -> Result<Self> {
        Ok(Self {
            qtable: qtable.map(crate::qlearn::load_qtable).transpose()?,
            svm: svm.map(KernelClassifier::load).transpose()?,
        })
    }
}

pub fn build_policy(kind: PolicyKind, artifacts: &Artifacts, thresholds: &Thresholds) -> Result<Policy> {
    Ok(match kind {
        PolicyKind::Naive => Policy::Naive,
        PolicyKind::Rl => Policy::Rl {
            q: artifacts
                .qtable
                .clone()
                .ok_or_else(|| Error::MissingArtifact(PathBuf::from("qtable.json")))?,
            filter: FilterConfig::with_threshold(thresholds.rl),
        },
        PolicyKind::Svm => Policy::Svm(
            artifacts
                .svm
                .clone()
                .ok_or_else(|| Error::MissingArtifact(PathBuf::from("svm.json")))?,
        ),
        PolicyKind::Overlap => Policy::Overlap {
            cutoff: thresholds.overlap,
        },
        PolicyKind::Nbv => Policy::Nbv {
            model: NbvQualityModel::default(),
            q_min: thresholds.nbv,
        },
    })
}

/// World randomness of one trial. Shared by every policy so that trials
/// are paired across policies.
pub fn trial_oracle_stream(oracle: &BreakageModel, map_id: &str, trial: usize) -> OracleStream {
    oracle.stream(&["trial".into(), map_id.into(), trial.into()])
}

/// Planner randomness of one trial, separate per policy.
pub fn trial_rng(seed: u64, map_id: &str, policy: PolicyKind, trial: usize) -> StreamRng {
    stream(seed, &["trial".into(), map_id.into(), policy.as_str().into(), trial.into()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub map: String,
    pub policy: PolicyKind,
    pub trial: usize,
    pub outcome: RunOutcome,
    pub steps: usize,
    pub recoveries: usize,
    pub seed: u64,
}

/// Runs the goal-reaching trial matrix. Rows come back in (map, policy,
/// trial) order regardless of scheduling.
pub fn run_goal_trials(
    maps: &[WorldMap],
    policies: &[Policy],
    oracle: &BreakageModel,
    trials: usize,
    seed: u64,
    cfg: &PlannerConfig,
) -> Result<Vec<ResultRow>> {
    let logged = run_goal_trials_logged(maps, policies, oracle, trials, seed, cfg)?;
    Ok(logged.into_iter().map(|(row, _)| row).collect())
}

/// Like [`run_goal_trials`] but keeps the full run logs.
pub fn run_goal_trials_logged(
    maps: &[WorldMap],
    policies: &[Policy],
    oracle: &BreakageModel,
    trials: usize,
    seed: u64,
    cfg: &PlannerConfig,
) -> Result<Vec<(ResultRow, RunResult)>> {
    let jobs: Vec<(usize, usize, usize)> = (0..maps.len())
        .flat_map(|m| (0..policies.len()).flat_map(move |p| (0..trials).map(move |t| (m, p, t))))
        .collect();
    jobs.par_iter()
        .map(|&(m, p, t)| {
            let map = &maps[m];
            let policy = &policies[p];
            let mut os = trial_oracle_stream(oracle, &map.name, t);
            let mut rng = trial_rng(seed, &map.name, policy.kind(), t);
            let run = run_safe_planner(map, policy, oracle, &mut os, cfg, &mut rng)?;
            let row = ResultRow {
                map: map.name.clone(),
                policy: policy.kind(),
                trial: t,
                outcome: run.outcome,
                steps: run.log.len(),
                recoveries: run.recoveries(),
                seed,
            };
            Ok((row, run))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub map: String,
    pub policy: PolicyKind,
    pub trials: usize,
    pub successes: usize,
    pub breakage: usize,
    pub stuck: usize,
    pub timeout: usize,
    pub success_pct: f64,
}

impl SummaryRow {
    pub fn failures(&self) -> usize {
        self.breakage + self.stuck + self.timeout
    }
}

/// Per (map, policy) tallies, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|s| s.map == r.map && s.policy == r.policy) {
            Some(i) => i,
            None => {
                out.push(SummaryRow {
                    map: r.map.clone(),
                    policy: r.policy,
                    trials: 0,
                    successes: 0,
                    breakage: 0,
                    stuck: 0,
                    timeout: 0,
                    success_pct: 0.0,
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.trials += 1;
        match r.outcome {
            RunOutcome::Success => s.successes += 1,
            RunOutcome::Breakage => s.breakage += 1,
            RunOutcome::Stuck => s.stuck += 1,
            RunOutcome::Timeout => s.timeout += 1,
        }
    }
    for s in &mut out {
        s.success_pct = success_pct(s.successes, s.trials);
    }
    out
}

pub fn success_pct(successes: usize, trials: usize) -> f64 {
    if trials == 0 {
        0.0
    } else {
        100.0 * successes as f64 / trials as f64
    }
}

/// Success percentage per policy pooled over maps.
pub fn pooled_success(rows: &[ResultRow], policy: PolicyKind) -> f64 {
    let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.policy == policy).collect();
    success_pct(mine.iter().filter(|r| r.outcome == RunOutcome::Success).count(), mine.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkEpisode {
    pub episode: usize,
    pub steps: usize,
    /// False when the episode hit the step cap.
    pub broke: bool,
}

/// One policy-filtered random walk from the map's start: each step picks
/// uniformly among admissible grid moves the policy deems safe, or the
/// best-scoring move when none is. Ends on breakage or after `cap` steps.
pub fn filtered_walk(
    map: &WorldMap,
    cam: &CameraModel,
    policy: &Policy,
    oracle: &BreakageModel,
    os: &mut OracleStream,
    rng: &mut StreamRng,
    cap: usize,
) -> Result<(usize, bool)> {
    let mut pose = map.start;
    for step in 0..cap {
        let vis = visible_indices(map, cam, &pose);
        let cands = admissible_candidates(map, cam, &pose, &vis);
        if cands.is_empty() {
            return Ok((step, false));
        }
        let verdicts: Vec<_> = cands
            .iter()
            .map(|c| policy.judge(map, cam, &pose, &c.to, &c.features))
            .collect();
        let safe: Vec<usize> = (0..cands.len()).filter(|&i| verdicts[i].safe).collect();
        let pick = if safe.is_empty() {
            (0..cands.len())
                .max_by(|&a, &b| verdicts[a].score.total_cmp(&verdicts[b].score).then(b.cmp(&a)))
                .unwrap()
        } else {
            safe[rng.gen_range(0..safe.len())]
        };
        let c = &cands[pick];
        if breakage(oracle, &c.features, os)? {
            return Ok((step + 1, true));
        }
        pose = c.to;
    }
    Ok((cap, false))
}

/// Steps-to-breakage episodes for each policy, cycling over `maps`.
/// Episode `e` of every policy shares world randomness.
pub fn eval_breakage(
    maps: &[WorldMap],
    policies: &[Policy],
    oracle: &BreakageModel,
    episodes: usize,
    cap: usize,
    seed: u64,
    cam: &CameraModel,
) -> Result<Vec<(PolicyKind, Vec<WalkEpisode>)>> {
    if maps.is_empty() {
        return Err(Error::Config("breakage evaluation needs at least one map".into()));
    }
    policies
        .iter()
        .map(|policy| {
            let eps: Result<Vec<WalkEpisode>> = (0..episodes)
                .into_par_iter()
                .map(|e| {
                    let map = &maps[e % maps.len()];
                    let mut os = oracle.stream(&["walk".into(), map.name.as_str().into(), e.into()]);
                    let mut rng = stream(seed, &["walk".into(), policy.kind().as_str().into(), e.into()]);
                    let (steps, broke) = filtered_walk(map, cam, policy, oracle, &mut os, &mut rng, cap)?;
                    Ok(WalkEpisode {
                        episode: e,
                        steps,
                        broke,
                    })
                })
                .collect();
            Ok((policy.kind(), eps?))
        })
        .collect()
}

/// Trains the Q-table and the classifier baseline on the same logged steps.
pub fn train_artifacts(
    maps: &[WorldMap],
    oracle: &BreakageModel,
    cfg: &TrainConfig,
    steps: u64,
    seed: u64,
    svm_cfg: &SvmConfig,
) -> Result<(TrainOutcome, KernelClassifier)> {
    let outcome = train(maps, oracle, cfg, steps, seed)?;
    let svm = svm_train(&outcome.samples, &SvmConfig { seed, ..*svm_cfg })?;
    Ok((outcome, svm))
}

/// Default map sets: corner-heavy training maps and disjoint evaluation
/// maps.
pub fn default_training_maps() -> Vec<WorldMap> {
    let tex = TextureProfile::default();
    let mut maps: Vec<WorldMap> = (100..104).map(|s| generate(s, MapStyle::Corner, &tex).map).collect();
    maps.push(generate(100, MapStyle::Corridor, &tex).map);
    maps.push(generate(100, MapStyle::Mixed, &tex).map);
    maps.push(generate(100, MapStyle::Room, &tex).map);
    maps
}

pub fn default_eval_maps() -> Vec<WorldMap> {
    let tex = TextureProfile::default();
    (200..204).map(|s| generate(s, MapStyle::Corner, &tex).map).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(policy: PolicyKind, outcome: RunOutcome) -> ResultRow {
        ResultRow {
            map: "m".into(),
            policy,
            trial: 0,
            outcome,
            steps: 1,
            recoveries: 0,
            seed: 0,
        }
    }

    #[test]
    fn success_percentages() {
        let mut rows: Vec<ResultRow> = (0..9).map(|_| row(PolicyKind::Rl, RunOutcome::Success)).collect();
        rows.push(row(PolicyKind::Rl, RunOutcome::Breakage));
        for o in [RunOutcome::Breakage, RunOutcome::Stuck, RunOutcome::Timeout] {
            rows.push(row(PolicyKind::Naive, o));
        }
        let s = summarize(&rows);
        assert_eq!(s[0].success_pct, 90.0);
        assert_eq!((s[0].successes, s[0].failures()), (9, 1));
        assert_eq!(s[1].success_pct, 0.0);
        for r in &s {
            assert_eq!(r.successes + r.failures(), r.trials);
        }
    }

    #[test]
    fn experiment_config_requires_version() {
        let ok = r#"{"version":1,"maps":[{"seed":3,"style":"corner"}],"policies":["naive"],"output":"out"}"#;
        let cfg = ExperimentConfig::from_json(ok).unwrap();
        assert_eq!(cfg.trials_per_cell, 10);
        let missing = r#"{"maps":[{"seed":3,"style":"corner"}],"policies":["naive"],"output":"out"}"#;
        assert!(matches!(ExperimentConfig::from_json(missing), Err(Error::Format(_))));
        let zero = r#"{"version":1,"maps":[{"seed":3,"style":"corner"}],"policies":["naive"],"output":"o","trials_per_cell":0}"#;
        assert!(matches!(ExperimentConfig::from_json(zero), Err(Error::Config(_))));
    }

    #[test]
    fn missing_artifacts_are_reported() {
        let err = build_policy(PolicyKind::Rl, &Artifacts::default(), &Thresholds::default()).unwrap_err();
        assert!(matches!(err, Error::MissingArtifact(_)));
        let err = MapSpec::File {
            file: "definitely/not/here.json".into(),
        }
        .load(Path::new("."))
        .unwrap_err();
        assert!(matches!(err, Error::MissingArtifact(_)));
    }

    #[test]
    fn zero_probability_oracle_walks_hit_the_cap() {
        let maps = vec![generate(1, MapStyle::Room, &TextureProfile::default()).map];
        let oracle = crate::oracle::calibrate(1e-300, 1e-300);
        let res = eval_breakage(&maps, &[Policy::Naive], &oracle, 5, 50, 3, &CameraModel::default()).unwrap();
        assert!(res[0].1.iter().all(|e| e.steps == 50 && !e.broke));
    }
}
