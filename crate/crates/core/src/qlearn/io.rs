//! Q-table file and training-log CSV.
//!
//! The table is a JSON object:
//! `{version, schema: "qtable", hyperparams: {alpha, gamma}, weights, schedule,
//! oracle, seed, steps, maps, discretization, values[800], visits[800]}`.
//! `values` and `visits` are laid out direction-major, then angle bin, then
//! overlap bin.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::train::EpisodeRecord;
use super::{EpsilonSchedule, Provenance, QTable, RewardWeights};
use crate::error::{Error, Result};
use crate::features::{ANGLE_BINS, ANGLE_BIN_WIDTH, NUM_CELLS, OVERLAP_BINS, OVERLAP_BIN_WIDTH};
use crate::oracle::BreakageModel;

pub const QTABLE_VERSION: u32 = 1;
pub const QTABLE_SCHEMA: &str = "qtable";

#[derive(Serialize, Deserialize)]
struct Hyperparams {
    alpha: f64,
    gamma: f64,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct Discretization {
    eta: Vec<String>,
    angle_bins: usize,
    angle_bin_width_deg: f64,
    overlap_bins: usize,
    overlap_bin_width: u32,
}

impl Discretization {
    fn current() -> Self {
        Self {
            eta: vec!["forward".into(), "backward".into()],
            angle_bins: ANGLE_BINS,
            angle_bin_width_deg: ANGLE_BIN_WIDTH,
            overlap_bins: OVERLAP_BINS,
            overlap_bin_width: OVERLAP_BIN_WIDTH,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QTableFile {
    version: u32,
    schema: String,
    hyperparams: Hyperparams,
    weights: RewardWeights,
    schedule: EpsilonSchedule,
    oracle: BreakageModel,
    seed: u64,
    steps: u64,
    maps: Vec<String>,
    discretization: Discretization,
    values: Vec<f64>,
    visits: Vec<u64>,
}

/// Checks the `version` and `schema` fields of a JSON container.
pub(crate) fn check_header(v: &Value, schema: &str, version: u32) -> Result<()> {
    let found = v
        .get("version")
        .ok_or_else(|| Error::Format("missing version field".into()))?
        .as_u64()
        .ok_or_else(|| Error::Format("version must be an integer".into()))?;
    if found != u64::from(version) {
        return Err(Error::Format(format!("schema version {found} does not match expected {version}")));
    }
    match v.get("schema").and_then(Value::as_str) {
        Some(s) if s == schema => Ok(()),
        Some(s) => Err(Error::Format(format!("expected schema '{schema}', found '{s}'"))),
        None => Err(Error::Format("missing schema tag".into())),
    }
}

pub fn qtable_to_json(q: &QTable) -> Result<String> {
    let p = &q.provenance;
    let file = QTableFile {
        version: QTABLE_VERSION,
        schema: QTABLE_SCHEMA.into(),
        hyperparams: Hyperparams {
            alpha: q.alpha,
            gamma: q.gamma,
        },
        weights: p.weights,
        schedule: p.schedule,
        oracle: p.oracle,
        seed: p.seed,
        steps: p.steps,
        maps: p.maps.clone(),
        discretization: Discretization::current(),
        values: q.values().to_vec(),
        visits: q.visit_counts().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn qtable_from_json(text: &str) -> Result<QTable> {
    let raw: Value = serde_json::from_str(text)?;
    check_header(&raw, QTABLE_SCHEMA, QTABLE_VERSION)?;
    let file: QTableFile = serde_json::from_value(raw)?;
    if file.discretization != Discretization::current() {
        return Err(Error::Format("discretization metadata does not match this build".into()));
    }
    if file.values.len() != NUM_CELLS || file.visits.len() != NUM_CELLS {
        return Err(Error::Format(format!("expected {NUM_CELLS} values and visits")));
    }
    let provenance = Provenance {
        weights: file.weights,
        schedule: file.schedule,
        oracle: file.oracle,
        seed: file.seed,
        steps: file.steps,
        maps: file.maps,
    };
    Ok(QTable::from_parts(
        file.values,
        file.visits,
        file.hyperparams.alpha,
        file.hyperparams.gamma,
        provenance,
    ))
}

pub fn save_qtable(q: &QTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = qtable_to_json(q)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_qtable(path: impl AsRef<Path>) -> Result<QTable> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    qtable_from_json(&text)
}

/// Columns: episode, steps, epsilon, terminal_reason.
pub fn write_training_log<W: std::io::Write>(log: &[EpisodeRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "steps", "epsilon", "terminal_reason"])?;
    for e in log {
        w.write_record([
            e.episode.to_string(),
            e.steps.to_string(),
            format!("{:.4}", e.epsilon),
            e.terminal_reason.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<training log>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::CellIndex;
    use proptest::prelude::*;

    #[test]
    fn missing_version_is_format_error() {
        let q = QTable::default();
        let mut v: Value = serde_json::from_str(&qtable_to_json(&q).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("version");
        let err = qtable_from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn version_mismatch_is_format_error() {
        let q = QTable::default();
        let mut v: Value = serde_json::from_str(&qtable_to_json(&q).unwrap()).unwrap();
        v["version"] = Value::from(QTABLE_VERSION + 1);
        assert!(matches!(qtable_from_json(&v.to_string()), Err(Error::Format(_))));
        v["version"] = Value::from(QTABLE_VERSION);
        v["schema"] = Value::from("svm");
        assert!(matches!(qtable_from_json(&v.to_string()), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bitwise(vals in proptest::collection::vec(-1e3f64..0.0, NUM_CELLS),
                                 visits in proptest::collection::vec(0u64..1_000_000, NUM_CELLS),
                                 seed in any::<u64>()) {
            let mut q = QTable::new(0.2, 0.9);
            for (i, (&v, &n)) in vals.iter().zip(&visits).enumerate() {
                q.set_value(CellIndex::from_linear(i), v);
                q.set_visits(CellIndex::from_linear(i), n);
            }
            q.provenance.seed = seed;
            q.provenance.steps = 1234;
            let back = qtable_from_json(&qtable_to_json(&q).unwrap()).unwrap();
            for (a, b) in q.values().iter().zip(back.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back, q);
        }
    }
}
