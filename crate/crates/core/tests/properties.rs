use proptest::prelude::*;

use slamsafe::baselines::{Policy, PolicyKind};
use slamsafe::features::{discretize, CellIndex, StateActionFeatures, NUM_CELLS};
use slamsafe::filter::{is_safe, FilterConfig};
use slamsafe::harness::{run_goal_trials, summarize, run_goal_trials_logged};
use slamsafe::oracle::{calibrate, BreakageModel};
use slamsafe::planner::{PlannerConfig, RunOutcome};
use slamsafe::qlearn::{qtable_from_json, qtable_to_json, QTable};
use slamsafe::world::gen::{generate, MapStyle, TextureProfile};
use slamsafe::world::Direction;

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Forward), Just(Direction::Backward)]
}

proptest! {
    #[test]
    fn cells_are_valid_and_round_trip(eta in direction(), dt in 0.0f64..=30.0, ov in 0u32..=600) {
        let c = discretize(&StateActionFeatures::new(eta, dt, ov));
        prop_assert!(c.linear() < NUM_CELLS);
        prop_assert_eq!(CellIndex::from_linear(c.linear()), c);
    }

    #[test]
    fn qtable_json_is_lossless(vals in proptest::collection::vec(-30.0f64..0.0, NUM_CELLS), seed in 0u64..1000) {
        let mut q = QTable::new(0.2, 0.1);
        for (i, v) in vals.iter().enumerate() {
            q.set_value(CellIndex::from_linear(i), *v);
            q.set_visits(CellIndex::from_linear(i), seed + i as u64);
        }
        let back = qtable_from_json(&qtable_to_json(&q).unwrap()).unwrap();
        for i in 0..NUM_CELLS {
            let c = CellIndex::from_linear(i);
            prop_assert_eq!(back.value(c).to_bits(), q.value(c).to_bits());
            prop_assert_eq!(back.visits(c), q.visits(c));
        }
    }

    #[test]
    fn oracle_is_monotone(dt in 0.0f64..27.0, ov in 0u32..600) {
        let m = BreakageModel::default();
        let p = |dt, ov| m.probability(&StateActionFeatures::new(Direction::Forward, dt, ov)).unwrap();
        prop_assert!(p(dt, ov) <= p((dt + 1.0).min(30.0), ov));
        prop_assert!(p(dt, ov + 1) <= p(dt, ov));
    }
}

#[test]
fn trial_accounting_adds_up() {
    let maps: Vec<_> = [1, 2].iter().map(|&s| generate(s, MapStyle::Mixed, &TextureProfile::default()).map).collect();
    let policies = [Policy::Naive, Policy::Overlap { cutoff: 100 }];
    let rows = run_goal_trials(&maps, &policies, &BreakageModel::default(), 4, 3, &PlannerConfig::default()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 4);
    // deterministic (map, policy, trial) order
    let keys: Vec<_> = rows.iter().map(|r| (r.map.clone(), r.policy, r.trial)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| (maps.iter().position(|m| m.name == a.0), a.1, a.2).cmp(&(maps.iter().position(|m| m.name == b.0), b.1, b.2)));
    assert_eq!(keys, sorted);
    for s in summarize(&rows) {
        assert_eq!(s.successes + s.failures(), s.trials);
        assert_eq!(s.failures(), s.breakage + s.stuck + s.timeout);
    }
    for r in &rows {
        assert_eq!(r.outcome == RunOutcome::Success, r.outcome.as_str() == "success");
    }
}

#[test]
fn zero_probability_oracle_never_breaks() {
    let m = generate(4, MapStyle::Corner, &TextureProfile::default()).map;
    let oracle = calibrate(1e-300, 2e-300);
    let rows = run_goal_trials(&[m], &[Policy::Naive], &oracle, 5, 1, &PlannerConfig::default()).unwrap();
    assert!(rows.iter().all(|r| r.outcome != RunOutcome::Breakage));
}

#[test]
fn rl_gate_only_executes_safe_steps() {
    // a table that trusts straight, well-covered steps only
    let mut q = QTable::new(0.2, 0.1);
    for c in CellIndex::all() {
        q.set_visits(c, 10);
        let good = c.angle_bin <= 6 && c.overlap_bin >= 4;
        q.set_value(c, if good { -11.0 } else { -20.0 });
    }
    let filter = FilterConfig::with_threshold(-12.0);
    let policy = Policy::Rl { q: q.clone(), filter };
    let m = generate(7, MapStyle::Corner, &TextureProfile::default()).map;
    let logged = run_goal_trials_logged(&[m], &[policy], &BreakageModel::default(), 6, 2, &PlannerConfig::default()).unwrap();
    let mut steps = 0;
    for (row, run) in &logged {
        assert_eq!(row.policy, PolicyKind::Rl);
        for s in &run.log {
            steps += 1;
            assert!(is_safe(&q, &filter, &s.step.features), "unsafe step executed: {:?}", s.step.features);
        }
    }
    assert!(steps > 0);
}
