//! `slamsafe` command line: map generation, training, evaluation and
//! plot-data export. Relative output paths resolve under `$SLAMSAFE_OUT`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slamsafe::baselines::{PolicyKind, SvmConfig};
use slamsafe::harness::report::{
    bin_trend, breakage_bins, breakage_summary, read_breakage_summary, read_results_file, read_samples,
    read_training_log, write_bins, write_breakage_summary, write_episode_curve, write_results, write_samples,
    write_summary, write_walk_episodes, BinAxis,
};
use slamsafe::harness::{
    build_policy, default_eval_maps, default_training_maps, eval_breakage, output_path, run_goal_trials, summarize,
    train_artifacts, tune_thresholds, Artifacts, ExperimentConfig, MapSpec, OracleTargets, Thresholds,
};
use slamsafe::oracle::BreakageModel;
use slamsafe::planner::PlannerConfig;
use slamsafe::qlearn::{save_qtable, train, write_training_log, EpsilonSchedule, TrainConfig};
use slamsafe::world::gen::{generate, MapStyle, TextureProfile};
use slamsafe::world::{save_map, CameraModel, WorldMap};
use slamsafe::{Error, Result};

#[derive(Parser)]
#[command(name = "slamsafe", version, about = "Learned SLAM-safe action filtering in a planar simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a map file from a seed.
    Genmap(GenmapArgs),
    /// Train the Q-table and the classifier baseline.
    Train(TrainArgs),
    /// Steps-to-breakage comparison on policy-filtered random walks.
    EvalBreakage(EvalBreakageArgs),
    /// Goal-reaching trial matrix from an experiment config.
    EvalGoal(EvalGoalArgs),
    /// Merge run directories and emit plot data.
    Compare(CompareArgs),
}

#[derive(Args)]
struct OracleArgs {
    /// Breakage probability at full overlap and no turn.
    #[arg(long, default_value_t = OracleTargets::default().low)]
    oracle_low: f64,
    /// Breakage probability with nothing co-visible at the largest turn.
    #[arg(long, default_value_t = OracleTargets::default().high)]
    oracle_high: f64,
    #[arg(long, default_value_t = OracleTargets::default().overlap_share)]
    overlap_share: f64,
}

impl OracleArgs {
    fn model(&self, seed: u64) -> BreakageModel {
        OracleTargets {
            low: self.oracle_low,
            high: self.oracle_high,
            overlap_share: self.overlap_share,
        }
        .model(seed)
    }
}

#[derive(Args)]
struct GenmapArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = parse_style)]
    style: MapStyle,
    #[arg(long)]
    out: PathBuf,
    /// Landmarks per meter of textured wall.
    #[arg(long, default_value_t = TextureProfile::default().density)]
    density: f64,
    /// Skip the low-texture stretches (corner maps always keep them).
    #[arg(long)]
    no_low_texture: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Comma-separated maps: files or `style:seed`. Defaults to the built-in
    /// training set.
    #[arg(long, value_delimiter = ',')]
    maps: Vec<String>,
    #[arg(long, default_value_t = 200_000)]
    steps: u64,
    #[arg(long, default_value_t = TrainConfig::default().alpha)]
    alpha: f64,
    #[arg(long, default_value_t = TrainConfig::default().gamma)]
    gamma: f64,
    /// Exploitation probability added every 20 episodes.
    #[arg(long, default_value_t = EpsilonSchedule::default().increment)]
    eps_incr: f64,
    /// Extra uniform-random steps logged for the breakage histograms.
    #[arg(long, default_value_t = 5000)]
    random_steps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(Args)]
struct ThresholdArgs {
    /// JSON file with `rl`, `overlap` and `nbv` cutoffs (as written by eval-goal).
    #[arg(long)]
    thresholds: Option<PathBuf>,
    #[arg(long)]
    rl_threshold: Option<f64>,
    #[arg(long)]
    overlap_cutoff: Option<u32>,
    #[arg(long)]
    nbv_q_min: Option<f64>,
}

impl ThresholdArgs {
    fn resolve(&self) -> Result<Thresholds> {
        let mut t = match &self.thresholds {
            Some(p) => serde_json::from_str(&read_text(p)?)?,
            None => Thresholds::default(),
        };
        if let Some(v) = self.rl_threshold {
            t.rl = v;
        }
        if let Some(v) = self.overlap_cutoff {
            t.overlap = v;
        }
        if let Some(v) = self.nbv_q_min {
            t.nbv = v;
        }
        Ok(t)
    }
}

#[derive(Args)]
struct EvalBreakageArgs {
    #[arg(long, value_delimiter = ',', default_value = "naive,rl,svm")]
    policies: Vec<PolicyKind>,
    #[arg(long, default_value_t = 50)]
    episodes: usize,
    #[arg(long)]
    qtable: Option<PathBuf>,
    #[arg(long)]
    svm: Option<PathBuf>,
    /// Comma-separated maps; defaults to the built-in evaluation set.
    #[arg(long, value_delimiter = ',')]
    maps: Vec<String>,
    /// Step cap per episode.
    #[arg(long, default_value_t = 500)]
    cap: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "breakage")]
    out: PathBuf,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(Args)]
struct EvalGoalArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directories (train, eval-breakage or eval-goal outputs).
    #[arg(long = "in", num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Episodes per block of the training curve.
    #[arg(long, default_value_t = 50)]
    block: usize,
}

fn parse_style(s: &str) -> std::result::Result<MapStyle, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_text(p: &Path) -> Result<String> {
    if !p.exists() {
        return Err(Error::MissingArtifact(p.to_path_buf()));
    }
    fs::read_to_string(p).map_err(|e| io_err(p, e))
}

fn io_err(p: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: p.to_path_buf(),
        source: e,
    }
}

fn create(p: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = p.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?))
}

fn out_dir(p: &Path) -> Result<PathBuf> {
    let dir = output_path(p);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

fn load_maps(specs: &[String], fallback: fn() -> Vec<WorldMap>) -> Result<Vec<WorldMap>> {
    if specs.is_empty() {
        return Ok(fallback());
    }
    let cwd = PathBuf::from(".");
    specs.iter().map(|s| MapSpec::parse(s)?.load(&cwd)).collect()
}

fn check_unique_names(maps: &[WorldMap]) -> Result<()> {
    let mut names: Vec<&str> = maps.iter().map(|m| m.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("map name '{}' appears twice", w[0])));
    }
    Ok(())
}

fn oracle_meta(o: &BreakageModel) -> Vec<(String, String)> {
    vec![
        ("oracle_b0".into(), format!("{:.6}", o.b0)),
        ("oracle_b_overlap".into(), format!("{:.6}", o.b_overlap)),
        ("oracle_b_angle".into(), format!("{:.6}", o.b_angle)),
    ]
}

fn threshold_meta(t: &Thresholds) -> Vec<(String, String)> {
    vec![
        ("rl_threshold".into(), format!("{:.6}", t.rl)),
        ("overlap_cutoff".into(), t.overlap.to_string()),
        ("nbv_q_min".into(), format!("{:.6}", t.nbv)),
    ]
}

fn genmap(a: GenmapArgs) -> Result<()> {
    let texture = TextureProfile {
        density: a.density,
        low_texture: !a.no_low_texture,
        ..TextureProfile::default()
    };
    let g = generate(a.seed, a.style, &texture);
    let out = output_path(&a.out);
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    save_map(&g.map, &out)?;
    eprintln!("{}: {} walls, {} landmarks -> {}", g.map.name, g.map.walls.len(), g.map.landmarks.len(), out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let maps = load_maps(&a.maps, default_training_maps)?;
    let oracle = a.oracle.model(a.seed);
    let cfg = TrainConfig {
        alpha: a.alpha,
        gamma: a.gamma,
        schedule: EpsilonSchedule {
            increment: a.eps_incr,
            ..EpsilonSchedule::default()
        },
        ..TrainConfig::default()
    };
    let dir = out_dir(&a.out)?;
    let (outcome, svm) = train_artifacts(&maps, &oracle, &cfg, a.steps, a.seed, &SvmConfig::default())?;
    save_qtable(&outcome.qtable, dir.join("qtable.json"))?;
    svm.save(dir.join("svm.json"))?;
    write_training_log(&outcome.log, create(&dir.join("training_log.csv"))?)?;
    write_samples(&outcome.samples, create(&dir.join("samples.csv"))?)?;
    if a.random_steps > 0 {
        let random_cfg = TrainConfig {
            schedule: EpsilonSchedule::fixed(0.0),
            ..cfg
        };
        let seed = a.seed.wrapping_add(1);
        let random = train(&maps, &oracle, &random_cfg, a.random_steps, seed)?;
        write_samples(&random.samples, create(&dir.join("random_samples.csv"))?)?;
    }
    eprintln!("{} episodes, {} steps -> {}", outcome.log.len(), outcome.samples.len(), dir.display());
    Ok(())
}

fn cmd_eval_breakage(a: EvalBreakageArgs) -> Result<()> {
    let maps = load_maps(&a.maps, default_eval_maps)?;
    check_unique_names(&maps)?;
    let oracle = a.oracle.model(a.seed);
    let thresholds = a.thresholds.resolve()?;
    let artifacts = Artifacts::load(a.qtable.as_deref(), a.svm.as_deref())?;
    let policies = a
        .policies
        .iter()
        .map(|&k| build_policy(k, &artifacts, &thresholds))
        .collect::<Result<Vec<_>>>()?;
    let results = eval_breakage(&maps, &policies, &oracle, a.episodes, a.cap, a.seed, &CameraModel::default())?;
    let dir = out_dir(&a.out)?;
    let mut meta = oracle_meta(&oracle);
    meta.extend(threshold_meta(&thresholds));
    meta.push(("seed".into(), a.seed.to_string()));
    let summary = breakage_summary(&results);
    write_breakage_summary(&summary, &meta, create(&dir.join("breakage.csv"))?)?;
    write_walk_episodes(&results, create(&dir.join("walk_episodes.csv"))?)?;
    for s in &summary {
        println!("{:8} {:8.2} ± {:.2}  ({} of {} broke)", s.policy, s.mean_steps, s.stderr, s.broken, s.episodes);
    }
    Ok(())
}

fn cmd_eval_goal(a: EvalGoalArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let rel = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
    let maps = cfg.maps.iter().map(|m| m.load(&base)).collect::<Result<Vec<_>>>()?;
    check_unique_names(&maps)?;
    let oracle = cfg.oracle.model(cfg.seed);
    let artifacts = Artifacts::load(cfg.qtable.as_deref().map(rel).as_deref(), cfg.svm.as_deref().map(rel).as_deref())?;
    let planner = PlannerConfig::default();
    let dir = out_dir(&cfg.output)?;

    let mut thresholds = cfg.thresholds;
    if let Some(tuning) = &cfg.tuning {
        let tmaps = tuning.maps.iter().map(|m| m.load(&base)).collect::<Result<Vec<_>>>()?;
        let tuned = tune_thresholds(&cfg.policies, &tmaps, &artifacts, &oracle, tuning.trials, cfg.seed, &planner, thresholds)?;
        thresholds = tuned.thresholds;
        let mut w = csv::Writer::from_writer(create(&dir.join("tuning.csv"))?);
        w.write_record(["policy", "cutoff", "success_pct", "breakages"])?;
        for g in &tuned.grid {
            w.write_record([
                g.policy.to_string(),
                format!("{:.6}", g.cutoff),
                format!("{:.2}", g.success_pct),
                g.breakages.to_string(),
            ])?;
        }
        w.flush().map_err(|e| io_err(&dir, e))?;
    }
    fs::write(dir.join("thresholds.json"), serde_json::to_string_pretty(&thresholds)?)
        .map_err(|e| io_err(&dir, e))?;

    let policies = cfg
        .policies
        .iter()
        .map(|&k| build_policy(k, &artifacts, &thresholds))
        .collect::<Result<Vec<_>>>()?;
    let rows = run_goal_trials(&maps, &policies, &oracle, cfg.trials_per_cell, cfg.seed, &planner)?;
    let mut meta = oracle_meta(&oracle);
    meta.extend(threshold_meta(&thresholds));
    meta.push(("seed".into(), cfg.seed.to_string()));
    write_results(&rows, &meta, create(&dir.join("results.csv"))?)?;
    let summary = summarize(&rows);
    write_summary(&summary, &meta, create(&dir.join("summary.csv"))?)?;
    for s in &summary {
        println!("{:12} {:8} {:3}/{:<3} {:6.2}%", s.map, s.policy, s.successes, s.trials, s.success_pct);
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let dir = out_dir(&a.out)?;
    let mut rows = Vec::new();
    let mut bars = Vec::new();
    for d in &a.inputs {
        let d = output_path(d);
        let results = d.join("results.csv");
        if results.exists() {
            rows.extend(read_results_file(&results)?);
        }
        let breakage = d.join("breakage.csv");
        if breakage.exists() {
            bars.extend(read_breakage_summary(File::open(&breakage).map_err(|e| io_err(&breakage, e))?)?);
        }
        let random = d.join("random_samples.csv");
        if random.exists() {
            let samples = read_samples(File::open(&random).map_err(|e| io_err(&random, e))?)?;
            let ob = breakage_bins(&samples, BinAxis::Overlap);
            let ab = breakage_bins(&samples, BinAxis::Angle);
            write_bins(&ob, &ab, create(&dir.join("breakage_bins.csv"))?)?;
            let (so, sa) = (bin_trend(&ob, 20), bin_trend(&ab, 20));
            println!("breakage vs overlap: rho {:.3} p {:.2e}", so.rho, so.p_value);
            println!("breakage vs angle:   rho {:.3} p {:.2e}", sa.rho, sa.p_value);
        }
        let log = d.join("training_log.csv");
        if log.exists() {
            let log = read_training_log(File::open(&log).map_err(|e| io_err(&log, e))?)?;
            write_episode_curve(&log, a.block, create(&dir.join("training_curve.csv"))?)?;
        }
    }
    if !bars.is_empty() {
        write_breakage_summary(&bars, &[], create(&dir.join("steps_to_breakage.csv"))?)?;
    }
    if !rows.is_empty() {
        rows.sort_by(|x, y| (&x.map, x.policy, x.trial).cmp(&(&y.map, y.policy, y.trial)));
        write_results(&rows, &[], create(&dir.join("results.csv"))?)?;
        write_summary(&summarize(&rows), &[], create(&dir.join("success_table.csv"))?)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Genmap(a) => genmap(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::EvalBreakage(a) => cmd_eval_breakage(a),
        Cmd::EvalGoal(a) => cmd_eval_goal(a),
        Cmd::Compare(a) => cmd_compare(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
