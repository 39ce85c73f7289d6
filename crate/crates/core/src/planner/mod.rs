//! Trajectory planning and execution: quintic Bernstein segments along a
//! global route, a per-step safety check, recovery maneuvers and replanning.

mod bernstein;
pub mod rrt;

pub use bernstein::TrajectorySegment;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::Policy;
use crate::candidates::{admissible_candidates, step_admissible, ROBOT_RADIUS, TURN_GRID_DEG};
use crate::error::{Error, Result};
use crate::features::{featurize_with, StateActionFeatures, PROPOSAL_CAP_DEG};
use crate::oracle::{breakage, BreakageModel, OracleStream};
use crate::rng::StreamRng;
use crate::world::{normalize_angle, visible_indices, CameraModel, Direction, Pose, Segment, Vec2, WorldMap};
use rrt::{rrt_path, RrtConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Success radius around the goal, meters.
    pub goal_tolerance: f64,
    /// Executed steps (planned and recovery) before a run times out.
    pub step_budget: usize,
    /// Consecutive attempts without a safe move before a run is stuck.
    pub max_stuck: usize,
    /// Wall clearance requested of the global route.
    pub route_clearance: f64,
    /// Pure-pursuit lookahead along the curve, meters.
    pub lookahead: f64,
    /// Replan after this many consecutive planned steps; 0 disables.
    pub replan_every: usize,
    pub camera: CameraModel,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            goal_tolerance: 0.5,
            step_budget: 400,
            max_stuck: 5,
            route_clearance: 1.0,
            lookahead: 1.5,
            replan_every: 0,
            camera: CameraModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanStep {
    pub from: Pose,
    pub to: Pose,
    pub direction: Direction,
    /// Signed heading change, degrees.
    pub dtheta_deg: f64,
    pub features: StateActionFeatures,
}

impl PlanStep {
    pub fn length(&self) -> f64 {
        self.from.position().dist(self.to.position())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryCandidate {
    pub step: PlanStep,
    /// Cosine between the post-step heading and the bearing to the next
    /// route waypoint.
    pub alignment_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Route waypoints, starting at the planning pose.
    pub route: Vec<Vec2>,
    /// One smoothed segment per route leg, heading-continuous at the joints.
    pub segments: Vec<TrajectorySegment>,
    pub steps: Vec<PlanStep>,
    /// False when step generation stopped short of the goal.
    pub reaches_goal: bool,
}

const TENSIONS: [f64; 4] = [1.0, 0.5, 0.25, 0.0];
const DENSE_PER_LEG: usize = 120;

fn curve_clear(map: &WorldMap, seg: &TrajectorySegment) -> bool {
    seg.polyline(DENSE_PER_LEG)
        .windows(2)
        .all(|w| map.segment_clear(&Segment::new(w[0], w[1]), ROBOT_RADIUS))
}

fn global_route(map: &WorldMap, from: Vec2, goal: Vec2, cfg: &PlannerConfig, rng: &mut StreamRng) -> Result<Vec<Vec2>> {
    if !map.bounds.contains(goal) || map.clearance(goal) < ROBOT_RADIUS {
        return Err(Error::NoPath(format!("goal ({:.2}, {:.2}) is not reachable free space", goal.x, goal.y)));
    }
    let rrt_cfg = RrtConfig::default();
    let mut margin = cfg.route_clearance;
    while margin >= ROBOT_RADIUS {
        if map.clearance(from) >= margin {
            if let Some(route) = rrt_path(map, from, goal, margin, &rrt_cfg, rng) {
                return Ok(route);
            }
        }
        margin -= 0.25;
    }
    // the start may hug a wall after recovery moves; take a tight route
    rrt_path(map, from, goal, ROBOT_RADIUS, &rrt_cfg, rng)
        .ok_or_else(|| Error::NoPath(format!("no route to ({:.2}, {:.2})", goal.x, goal.y)))
}

fn smooth_route(map: &WorldMap, route: &[Vec2], start_heading: Vec2) -> Vec<TrajectorySegment> {
    let n = route.len();
    let tangent = |i: usize| -> Vec2 {
        if i == 0 {
            let chord = (route[1] - route[0]).normalized();
            // leave along the current heading unless it points away
            if start_heading.dot(chord) > 0.0 {
                start_heading
            } else {
                chord
            }
        } else if i == n - 1 {
            (route[n - 1] - route[n - 2]).normalized()
        } else {
            (route[i + 1] - route[i - 1]).normalized()
        }
    };
    (0..n - 1)
        .map(|i| {
            let (ta, tb) = (tangent(i), tangent(i + 1));
            TENSIONS
                .iter()
                .map(|&k| TrajectorySegment::hermite_like(route[i], ta, route[i + 1], tb, k))
                .find(|s| curve_clear(map, s))
                .unwrap_or_else(|| TrajectorySegment::hermite_like(route[i], ta, route[i + 1], tb, 0.0))
        })
        .collect()
}

/// Plans from `pose` to `goal`: global route, smoothed curve, then a
/// pure-pursuit walk along the curve cut into featurized ~1 m steps.
pub fn plan_to_goal(
    map: &WorldMap,
    cam: &CameraModel,
    pose: &Pose,
    goal: Vec2,
    cfg: &PlannerConfig,
    rng: &mut StreamRng,
) -> Result<Plan> {
    let route = global_route(map, pose.position(), goal, cfg, rng)?;
    let segments = smooth_route(map, &route, pose.heading());
    let mut dense: Vec<Vec2> = vec![route[0]];
    for s in &segments {
        dense.extend(s.polyline(DENSE_PER_LEG).into_iter().skip(1));
    }
    // cumulative arc length along the dense curve
    let mut arc = vec![0.0; dense.len()];
    for i in 1..dense.len() {
        arc[i] = arc[i - 1] + dense[i - 1].dist(dense[i]);
    }
    let total = *arc.last().unwrap();
    let cap = PROPOSAL_CAP_DEG.to_radians();
    let max_steps = (2.0 * total).ceil() as usize + 10;

    let mut steps = Vec::new();
    let mut cur = *pose;
    let mut progress = 0usize;
    let mut reaches_goal = false;
    for _ in 0..max_steps {
        let here = cur.position();
        let remaining = here.dist(goal);
        if remaining <= cfg.goal_tolerance {
            reaches_goal = true;
            break;
        }
        // nearest curve point, searched forward from the last match
        let window_end = dense.len().min(progress + 4 * DENSE_PER_LEG);
        progress = (progress..window_end)
            .min_by(|&a, &b| dense[a].dist(here).total_cmp(&dense[b].dist(here)))
            .unwrap_or(progress);
        let target_arc = arc[progress] + cfg.lookahead;
        let target = match arc[progress..].iter().position(|&s| s >= target_arc) {
            Some(k) => dense[progress + k],
            None => goal,
        };
        let desired = (target - here).angle();
        // snap to the candidate grid so planned steps land in trainable cells
        let grid = TURN_GRID_DEG[1].to_radians();
        let dtheta = (normalize_angle(desired - cur.theta).clamp(-cap, cap) / grid).round() * grid;
        let dist = if remaining < 1.5 { remaining.max(0.5) } else { 1.0 };
        let to = cur.stepped(Direction::Forward, dtheta, dist);
        if !step_admissible(map, &cur, &to) {
            break;
        }
        let vis = visible_indices(map, cam, &cur);
        let features = featurize_with(map, cam, &vis, &cur, &to, Direction::Forward);
        steps.push(PlanStep {
            from: cur,
            to,
            direction: Direction::Forward,
            dtheta_deg: dtheta.to_degrees(),
            features,
        });
        cur = to;
    }
    if !reaches_goal && cur.position().dist(goal) <= cfg.goal_tolerance {
        reaches_goal = true;
    }
    Ok(Plan {
        route,
        segments,
        steps,
        reaches_goal,
    })
}

/// First route waypoint at least `lookahead` away from `p`, else the goal.
fn next_waypoint(route: &[Vec2], p: Vec2, lookahead: f64) -> Vec2 {
    route
        .iter()
        .skip(1)
        .copied()
        .find(|w| w.dist(p) >= lookahead)
        .unwrap_or(*route.last().unwrap())
}

/// Safe admissible grid moves from `pose`, scored by alignment with the
/// bearing toward `waypoint`.
pub fn recovery_candidates(
    map: &WorldMap,
    cam: &CameraModel,
    policy: &Policy,
    pose: &Pose,
    waypoint: Vec2,
) -> Vec<RecoveryCandidate> {
    let vis = visible_indices(map, cam, pose);
    admissible_candidates(map, cam, pose, &vis)
        .into_iter()
        .filter(|c| policy.judge(map, cam, pose, &c.to, &c.features).safe)
        .map(|c| {
            let bearing = (waypoint - c.to.position()).normalized();
            let alignment_score = if bearing.norm() > 0.0 {
                c.to.heading().dot(bearing).clamp(-1.0, 1.0)
            } else {
                1.0
            };
            RecoveryCandidate {
                step: PlanStep {
                    from: *pose,
                    to: c.to,
                    direction: c.direction,
                    dtheta_deg: c.dtheta_deg,
                    features: c.features,
                },
                alignment_score,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunOutcome {
    Success,
    Breakage,
    Stuck,
    Timeout,
}

impl RunOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            RunOutcome::Success => "success",
            RunOutcome::Breakage => "breakage",
            RunOutcome::Stuck => "stuck",
            RunOutcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step_idx: usize,
    pub step: PlanStep,
    pub score: f64,
    pub safe: bool,
    pub recovery: bool,
    pub phi: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub log: Vec<StepRecord>,
    pub replans: usize,
    /// Start pose of every plan, for replan-consistency checks.
    pub plan_starts: Vec<(Pose, Vec2)>,
}

impl RunResult {
    pub fn recoveries(&self) -> usize {
        self.log.iter().filter(|r| r.recovery).count()
    }

    pub fn path(&self) -> Vec<Pose> {
        let mut out: Vec<Pose> = self.log.first().map(|r| r.step.from).into_iter().collect();
        out.extend(self.log.iter().map(|r| r.step.to));
        out
    }
}

/// Executes toward `map.goal` under `policy`. Before each planned step the
/// policy is consulted; rejected steps trigger the best-aligned safe grid
/// move and a replan. `Policy::Naive` gives the unfiltered baseline.
pub fn run_safe_planner(
    map: &WorldMap,
    policy: &Policy,
    oracle: &BreakageModel,
    oracle_stream: &mut OracleStream,
    cfg: &PlannerConfig,
    rng: &mut StreamRng,
) -> Result<RunResult> {
    let cam = &cfg.camera;
    let goal = map.goal;
    let mut pose = map.start;
    let mut log: Vec<StepRecord> = Vec::new();
    let mut plan: Option<Plan> = None;
    let mut next = 0usize;
    let mut since_plan = 0usize;
    let mut stuck = 0usize;
    let mut replans = 0usize;
    let mut plan_starts = Vec::new();

    let finish = |outcome, log, replans, plan_starts| {
        Ok(RunResult {
            outcome,
            log,
            replans,
            plan_starts,
        })
    };

    loop {
        if pose.position().dist(goal) <= cfg.goal_tolerance {
            return finish(RunOutcome::Success, log, replans, plan_starts);
        }
        if log.len() >= cfg.step_budget {
            return finish(RunOutcome::Timeout, log, replans, plan_starts);
        }
        let periodic = cfg.replan_every > 0 && since_plan >= cfg.replan_every;
        let exhausted = plan.as_ref().is_none_or(|p| next >= p.steps.len());
        if exhausted || periodic {
            match plan_to_goal(map, cam, &pose, goal, cfg, rng) {
                Ok(p) if !p.steps.is_empty() => {
                    plan_starts.push((pose, p.route[0]));
                    replans = plan_starts.len() - 1;
                    plan = Some(p);
                    next = 0;
                    since_plan = 0;
                }
                Ok(_) | Err(Error::NoPath(_)) => {
                    plan = None;
                    stuck += 1;
                    if stuck >= cfg.max_stuck {
                        return finish(RunOutcome::Stuck, log, replans, plan_starts);
                    }
                    continue;
                }
                Err(e) => return Err(e),
            }
        }
        let p = plan.as_ref().unwrap();
        let step = p.steps[next];
        let verdict = policy.judge(map, cam, &pose, &step.to, &step.features);
        let (chosen, score, recovery) = if verdict.safe {
            next += 1;
            since_plan += 1;
            (step, verdict.score, false)
        } else {
            let waypoint = next_waypoint(&p.route, pose.position(), cfg.lookahead);
            let cands = recovery_candidates(map, cam, policy, &pose, waypoint);
            // ties keep grid order
            let best = cands.iter().fold(None::<&RecoveryCandidate>, |best, c| match best {
                Some(b) if b.alignment_score >= c.alignment_score => Some(b),
                _ => Some(c),
            });
            plan = None;
            match best {
                None => {
                    stuck += 1;
                    if stuck >= cfg.max_stuck {
                        return finish(RunOutcome::Stuck, log, replans, plan_starts);
                    }
                    continue;
                }
                Some(c) => {
                    let score = policy.judge(map, cam, &pose, &c.step.to, &c.step.features).score;
                    (c.step, score, true)
                }
            }
        };
        stuck = 0;
        let phi = breakage(oracle, &chosen.features, oracle_stream)?;
        log.push(StepRecord {
            step_idx: log.len(),
            step: chosen,
            score,
            safe: true,
            recovery,
            phi,
        });
        pose = chosen.to;
        if phi {
            return finish(RunOutcome::Breakage, log, replans, plan_starts);
        }
    }
}

/// The unfiltered baseline: every planned step executes.
pub fn run_naive_planner(
    map: &WorldMap,
    oracle: &BreakageModel,
    oracle_stream: &mut OracleStream,
    cfg: &PlannerConfig,
    rng: &mut StreamRng,
) -> Result<RunResult> {
    run_safe_planner(map, &Policy::Naive, oracle, oracle_stream, cfg, rng)
}

/// Columns: step_idx, x, y, theta, direction, dtheta_deg, overlap, q_value,
/// safe_verdict, recovery_flag, phi. Pose columns are the post-step pose.
pub fn write_step_log<W: Write>(log: &[StepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step_idx",
        "x",
        "y",
        "theta",
        "direction",
        "dtheta_deg",
        "overlap",
        "q_value",
        "safe_verdict",
        "recovery_flag",
        "phi",
    ])?;
    for r in log {
        let to = r.step.to;
        w.write_record([
            r.step_idx.to_string(),
            format!("{:.6}", to.x),
            format!("{:.6}", to.y),
            format!("{:.6}", to.theta),
            r.step.direction.as_str().to_string(),
            format!("{:.4}", r.step.dtheta_deg),
            r.step.features.overlap.to_string(),
            format!("{:.6}", r.score),
            u8::from(r.safe).to_string(),
            u8::from(r.recovery).to_string(),
            u8::from(r.phi).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<step log>", e))?;
    Ok(())
}
