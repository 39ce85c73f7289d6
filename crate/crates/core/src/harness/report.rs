//! CSV writers and readers, and the plot-data reductions.
//!
//! Result files may start with `# key=value` metadata lines (oracle
//! coefficients, cutoffs) ahead of the column header.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ResultRow, SummaryRow, WalkEpisode};
use crate::baselines::PolicyKind;
use crate::error::{Error, Result};
use crate::features::{discretize, StateActionFeatures, ANGLE_BINS, OVERLAP_BINS};
use crate::qlearn::EpisodeRecord;
use crate::stats::{mean_se, spearman, Spearman};
use crate::world::Direction;

fn write_meta<W: Write>(out: &mut W, meta: &[(String, String)]) -> Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}={v}").map_err(|e| Error::io("<csv>", e))?;
    }
    Ok(())
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Columns: map, policy, trial, outcome, steps, recoveries, seed.
pub fn write_results<W: Write>(rows: &[ResultRow], meta: &[(String, String)], mut out: W) -> Result<()> {
    write_meta(&mut out, meta)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    finish(w)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input)
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_results_file(path: &Path) -> Result<Vec<ResultRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_results(f)
}

/// Columns: map, policy, trials, successes, failures, breakage, stuck,
/// timeout, success_pct.
pub fn write_summary<W: Write>(rows: &[SummaryRow], meta: &[(String, String)], mut out: W) -> Result<()> {
    write_meta(&mut out, meta)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "map",
        "policy",
        "trials",
        "successes",
        "failures",
        "breakage",
        "stuck",
        "timeout",
        "success_pct",
    ])?;
    for s in rows {
        w.write_record([
            s.map.clone(),
            s.policy.to_string(),
            s.trials.to_string(),
            s.successes.to_string(),
            s.failures().to_string(),
            s.breakage.to_string(),
            s.stuck.to_string(),
            s.timeout.to_string(),
            format!("{:.2}", s.success_pct),
        ])?;
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakageSummary {
    pub policy: PolicyKind,
    pub episodes: usize,
    pub mean_steps: f64,
    pub stderr: f64,
    pub broken: usize,
}

pub fn breakage_summary(results: &[(PolicyKind, Vec<WalkEpisode>)]) -> Vec<BreakageSummary> {
    results
        .iter()
        .map(|(k, eps)| {
            let steps: Vec<f64> = eps.iter().map(|e| e.steps as f64).collect();
            let m = mean_se(&steps);
            BreakageSummary {
                policy: *k,
                episodes: eps.len(),
                mean_steps: m.mean,
                stderr: m.se,
                broken: eps.iter().filter(|e| e.broke).count(),
            }
        })
        .collect()
}

/// Columns: policy, episodes, mean_steps, stderr, broken.
pub fn write_breakage_summary<W: Write>(rows: &[BreakageSummary], meta: &[(String, String)], mut out: W) -> Result<()> {
    write_meta(&mut out, meta)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "episodes", "mean_steps", "stderr", "broken"])?;
    for r in rows {
        w.write_record([
            r.policy.to_string(),
            r.episodes.to_string(),
            format!("{:.4}", r.mean_steps),
            format!("{:.4}", r.stderr),
            r.broken.to_string(),
        ])?;
    }
    finish(w)
}

pub fn read_breakage_summary<R: Read>(input: R) -> Result<Vec<BreakageSummary>> {
    reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Columns: policy, episode, steps, broke.
pub fn write_walk_episodes<W: Write>(results: &[(PolicyKind, Vec<WalkEpisode>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "episode", "steps", "broke"])?;
    for (k, eps) in results {
        for e in eps {
            w.write_record([k.to_string(), e.episode.to_string(), e.steps.to_string(), u8::from(e.broke).to_string()])?;
        }
    }
    finish(w)
}

/// Columns: eta, dtheta_deg, overlap, phi.
pub fn write_samples<W: Write>(samples: &[(StateActionFeatures, bool)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta", "dtheta_deg", "overlap", "phi"])?;
    for (f, phi) in samples {
        w.write_record([
            f.eta.as_str().to_string(),
            format!("{:.6}", f.dtheta_deg),
            f.overlap.to_string(),
            u8::from(*phi).to_string(),
        ])?;
    }
    finish(w)
}

#[derive(Deserialize)]
struct SampleRow {
    eta: Direction,
    dtheta_deg: f64,
    overlap: u32,
    phi: u8,
}

pub fn read_samples<R: Read>(input: R) -> Result<Vec<(StateActionFeatures, bool)>> {
    reader(input)
        .deserialize::<SampleRow>()
        .map(|r| {
            let r = r?;
            Ok((StateActionFeatures::new(r.eta, r.dtheta_deg, r.overlap), r.phi != 0))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinAxis {
    Overlap,
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinRate {
    pub bin: usize,
    pub n: usize,
    pub breaks: usize,
}

impl BinRate {
    pub fn rate(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.breaks as f64 / self.n as f64
        }
    }
}

/// Breakage counts per discretization bin along one axis.
pub fn breakage_bins(samples: &[(StateActionFeatures, bool)], axis: BinAxis) -> Vec<BinRate> {
    let nbins = match axis {
        BinAxis::Overlap => OVERLAP_BINS,
        BinAxis::Angle => ANGLE_BINS,
    };
    let mut bins: Vec<BinRate> = (0..nbins).map(|bin| BinRate { bin, n: 0, breaks: 0 }).collect();
    for (f, phi) in samples {
        let c = discretize(f);
        let b = match axis {
            BinAxis::Overlap => c.overlap_bin,
            BinAxis::Angle => c.angle_bin,
        } as usize;
        bins[b].n += 1;
        bins[b].breaks += usize::from(*phi);
    }
    bins
}

/// Spearman correlation between bin index and breakage rate over bins with
/// at least `min_count` samples.
pub fn bin_trend(bins: &[BinRate], min_count: usize) -> Spearman {
    let kept: Vec<&BinRate> = bins.iter().filter(|b| b.n >= min_count).collect();
    let x: Vec<f64> = kept.iter().map(|b| b.bin as f64).collect();
    let y: Vec<f64> = kept.iter().map(|b| b.rate()).collect();
    spearman(&x, &y)
}

/// Columns: axis, bin, n, breaks, rate.
pub fn write_bins<W: Write>(overlap: &[BinRate], angle: &[BinRate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "bin", "n", "breaks", "rate"])?;
    for (axis, bins) in [("overlap", overlap), ("angle", angle)] {
        for b in bins {
            w.write_record([
                axis.to_string(),
                b.bin.to_string(),
                b.n.to_string(),
                b.breaks.to_string(),
                format!("{:.6}", b.rate()),
            ])?;
        }
    }
    finish(w)
}

/// Ratio of mean episode length over the last tenth of episodes to the
/// first tenth.
pub fn decile_ratio(log: &[EpisodeRecord]) -> f64 {
    let n = log.len();
    let k = (n / 10).max(1);
    if n < 2 {
        return f64::NAN;
    }
    let mean = |s: &[EpisodeRecord]| s.iter().map(|e| e.steps as f64).sum::<f64>() / s.len() as f64;
    mean(&log[n - k..]) / mean(&log[..k])
}

/// Columns: block, first_episode, mean_steps, mean_epsilon. One row per
/// block of `block` consecutive episodes.
pub fn write_episode_curve<W: Write>(log: &[EpisodeRecord], block: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["block", "first_episode", "mean_steps", "mean_epsilon"])?;
    for (i, chunk) in log.chunks(block.max(1)).enumerate() {
        let n = chunk.len() as f64;
        w.write_record([
            i.to_string(),
            chunk[0].episode.to_string(),
            format!("{:.4}", chunk.iter().map(|e| e.steps as f64).sum::<f64>() / n),
            format!("{:.4}", chunk.iter().map(|e| e.epsilon).sum::<f64>() / n),
        ])?;
    }
    finish(w)
}

#[derive(Deserialize)]
struct LogRow {
    episode: usize,
    steps: usize,
    epsilon: f64,
    terminal_reason: crate::qlearn::TerminalReason,
}

pub fn read_training_log<R: Read>(input: R) -> Result<Vec<EpisodeRecord>> {
    reader(input)
        .deserialize::<LogRow>()
        .map(|r| {
            let r = r?;
            Ok(EpisodeRecord {
                episode: r.episode,
                steps: r.steps,
                epsilon: r.epsilon,
                terminal_reason: r.terminal_reason,
            })
        })
        .collect()
}
