//! The `storehouse` command-line tool.
//!
//! Every command that writes files also writes `manifest.json` into its
//! output directory.

pub mod manifest;
pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use storehouse_core::config::{default_config, ConfigError};
use storehouse_core::doe::{generate_pairwise, run_sweep, sweep_csv, verify_pairwise, ParameterSpace, SpaceError};
use storehouse_core::episode::{baseline, run_seeds, BASELINES};
use storehouse_core::metrics::{aggregate, episodes_csv, EpisodeMetrics, EpisodeRow, Summary};
use storehouse_core::policies::Policy;
use storehouse_core::render::render;
use storehouse_core::{Env, WarehouseConfig};
use storehouse_rl::train::{curve_csv, CurvePoint};
use storehouse_rl::{evaluate, train, Checkpoint, HyperError, Hyperparameters, QPolicy, Variant};
use thiserror::Error;

use crate::manifest::RunManifest;

pub const CONFIG_ENV: &str = "STOREHOUSE_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "storehouse", version, about = "Warehouse storage simulation and learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a policy for a number of episodes and write per-episode metrics.
    Simulate(SimulateArgs),
    /// Train DQN or VAM networks, one per seed.
    Train(TrainArgs),
    /// Run a trained checkpoint greedily.
    Evaluate(EvaluateArgs),
    /// Build an all-pairs suite over a parameter space and sweep it.
    Tune(TuneArgs),
    /// Serve the environment over line-delimited JSON on TCP.
    Serve(ServeArgs),
    /// Print ASCII frames of an episode.
    Render(RenderArgs),
    /// Draw an SVG line chart from a CSV file.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArg {
    /// Environment configuration (TOML); the built-in 6x6 setting if unset.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Comma-separated base seeds; each gets its own episode stream.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    /// Trailing window for summaries.
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// random, ihp, ehp, or dqn/vam together with --checkpoint.
    #[arg(long)]
    pub policy: String,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Defaults to the configuration stored in the checkpoint.
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// default-dqn, tuned-dqn or desk.
    #[arg(long, default_value = "default-dqn", conflicts_with = "hyper")]
    pub preset: String,
    /// Hyperparameter TOML file; unset keys take default-dqn values.
    #[arg(long)]
    pub hyper: Option<PathBuf>,
    /// Overrides the training budget in environment steps.
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, default_value = "vam")]
    pub variant: Variant,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Greedy evaluation episodes per trained network.
    #[arg(long, default_value_t = 20)]
    pub eval_episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Parameter space (TOML).
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long, default_value = "vam")]
    pub variant: Variant,
    /// Base hyperparameters that the suite rows override.
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Final training episodes averaged per combination.
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    /// Only write the suite; for spaces trained outside this tool.
    #[arg(long)]
    pub suite_only: bool,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, default_value = "127.0.0.1:7777")]
    pub bind: String,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, default_value = "ehp")]
    pub policy: String,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Steps to play; 0 shows the initial state only.
    #[arg(long, default_value_t = 0)]
    pub steps: u64,
    /// Print a frame every this many steps.
    #[arg(long, default_value_t = 1)]
    pub every: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "")]
    pub title: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Hyper(#[from] HyperError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    /// 3 for bad configuration or arguments, 4 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Space(_) | CliError::Hyper(_) | CliError::Usage(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Tune(a) => tune(a),
        Command::Serve(a) => serve(a),
        Command::Render(a) => cmd_render(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn load_config(arg: &ConfigArg) -> Result<Arc<WarehouseConfig>> {
    Ok(Arc::new(match &arg.config {
        Some(p) => WarehouseConfig::from_path(p)?,
        None => default_config(),
    }))
}

fn manifest(command: &str, out: &Path, arg: &ConfigArg, config: &WarehouseConfig) -> RunManifest {
    let mut m = RunManifest::new(command, out);
    m.config_path = arg.config.as_ref().map(|p| p.display().to_string());
    m.config = config.to_toml();
    m
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(())
}

fn write(path: PathBuf, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(anyhow!(e)))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display())).map_err(CliError::Runtime)
}

type PolicyFactory = Box<dyn Fn(u64) -> Box<dyn Policy + Send> + Sync>;

/// Builds the policy factory for a CLI policy name.
fn policy_factory(name: &str, checkpoint: Option<&Path>) -> Result<PolicyFactory> {
    if BASELINES.contains(&name) {
        let name = name.to_string();
        return Ok(Box::new(move |seed| baseline(&name, seed).expect("known baseline")));
    }
    let variant: Variant = name
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown policy {name:?} (expected random, ihp, ehp, dqn or vam)")))?;
    let path = checkpoint.ok_or_else(|| CliError::Usage(format!("policy {name} needs --checkpoint")))?;
    let network = load_checkpoint(path)?.network().map_err(|e| CliError::Runtime(e.into()))?;
    Ok(Box::new(move |_| Box::new(QPolicy::new(network.clone(), variant))))
}

#[derive(Debug, Serialize)]
struct SeedSummary {
    seed: u64,
    summary: Summary,
}

#[derive(Debug, Serialize)]
struct SummaryFile {
    policy: String,
    window: usize,
    overall: Summary,
    per_seed: Vec<SeedSummary>,
}

fn summarize(policy: &str, rows: &[EpisodeRow], seeds: &[u64], window: usize) -> Result<SummaryFile> {
    let err = |e| CliError::Usage(format!("cannot summarize: {e}"));
    let per_seed = seeds
        .iter()
        .map(|&seed| {
            let list: Vec<EpisodeMetrics> = rows.iter().filter(|r| r.seed == seed).map(|r| r.metrics.clone()).collect();
            Ok(SeedSummary {
                seed,
                summary: aggregate(&list, window).map_err(err)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // Overall: each seed's trailing window pooled together.
    let pooled: Vec<EpisodeMetrics> = seeds
        .iter()
        .flat_map(|&seed| {
            let list: Vec<_> = rows.iter().filter(|r| r.seed == seed).collect();
            let from = list.len().saturating_sub(window);
            list[from..].iter().map(|r| r.metrics.clone()).collect::<Vec<_>>()
        })
        .collect();
    Ok(SummaryFile {
        policy: policy.to_string(),
        window,
        overall: aggregate(&pooled, pooled.len().max(1)).map_err(err)?,
        per_seed,
    })
}

fn print_summary(s: &SummaryFile) {
    let o = &s.overall;
    println!(
        "{}: {} episodes (last {} per seed) | score {:.3} [{:.3}, {:.3}] | delivered {:.2} | mean age {:.2} | fifo violation rate {:.4} | invalid {:.2}",
        s.policy,
        o.episodes,
        s.window,
        o.score.mean,
        o.score.min,
        o.score.max,
        o.delivered_boxes.mean,
        o.mean_box_age.mean,
        o.fifo_violation_rate.mean,
        o.invalid_action_count.mean
    );
}

fn run_policy(
    command: &str,
    config_arg: &ConfigArg,
    config: Arc<WarehouseConfig>,
    policy: &str,
    checkpoint: Option<&Path>,
    run: &RunArgs,
) -> Result<()> {
    if run.seeds.is_empty() || run.episodes == 0 || run.window == 0 {
        return Err(CliError::Usage("seeds, episodes and window must be non-empty".into()));
    }
    let factory = policy_factory(policy, checkpoint)?;
    create_dir(&run.out)?;
    let rows = pool(run.jobs)?.install(|| run_seeds(Arc::clone(&config), &run.seeds, run.episodes, &factory));
    let summary = summarize(policy, &rows, &run.seeds, run.window)?;
    write(run.out.join("episodes.csv"), episodes_csv(&rows))?;
    write(
        run.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n",
    )?;
    let mut m = manifest(command, &run.out, config_arg, &config);
    m.policy = Some(policy.to_string());
    m.seeds = run.seeds.clone();
    m.episodes = run.episodes;
    m.write(&run.out).context("writing manifest")?;
    print_summary(&summary);
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let config = load_config(&a.config)?;
    run_policy("simulate", &a.config, config, &a.policy, a.checkpoint.as_deref(), &a.run)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let config = match &a.config.config {
        Some(_) => load_config(&a.config)?,
        None => Arc::new(storehouse_core::config::load_config(&ckpt.config)?),
    };
    let policy = ckpt.variant.to_string();
    run_policy("evaluate", &a.config, config, &policy, Some(&a.checkpoint), &a.run)
}

fn hyperparameters(h: &HyperArgs) -> Result<Hyperparameters> {
    let mut hp = match &h.hyper {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Hyperparameters::from_toml(&text)?
        }
        None => Hyperparameters::preset(&h.preset)?,
    };
    if let Some(steps) = h.max_steps {
        hp.max_training_steps = steps;
    }
    hp.validate()?;
    Ok(hp)
}

/// Per-episode mean/min/max across runs, over the episodes all runs reached.
pub fn curve_band(curves: &[Vec<CurvePoint>]) -> String {
    let mut out = String::from("episode,mean,min,max\n");
    let n = curves.iter().map(Vec::len).min().unwrap_or(0);
    for e in 0..n {
        let scores: Vec<f64> = curves.iter().map(|c| c[e].score).collect();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.push_str(&format!("{e},{mean},{min},{max}\n"));
    }
    out
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let config = load_config(&a.config)?;
    let hp = hyperparameters(&a.hyper)?;
    if a.seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    create_dir(&a.out)?;
    let outcomes: Vec<_> = pool(a.jobs)?.install(|| {
        a.seeds
            .par_iter()
            .map(|&seed| (seed, train(Arc::clone(&config), &hp, a.variant, seed)))
            .collect()
    });

    let mut m = manifest("train", &a.out, &a.config, &config);
    m.policy = Some(a.variant.to_string());
    m.seeds = a.seeds.clone();
    m.episodes = a.eval_episodes;
    let mut curves = Vec::new();
    let mut eval_rows = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(o) => {
                Checkpoint::new(&o.network, a.variant, seed, hp.clone(), config.to_toml())
                    .save(a.out.join(format!("checkpoint-seed{seed}.json")))
                    .context("writing checkpoint")?;
                write(a.out.join(format!("curve-seed{seed}.csv")), curve_csv(&o.curve))?;
                let evals = evaluate(Arc::clone(&config), &o.network, a.variant, seed, a.eval_episodes);
                eval_rows.extend(evals.into_iter().enumerate().map(|(episode, metrics)| EpisodeRow {
                    episode,
                    policy: a.variant.to_string(),
                    seed,
                    metrics,
                }));
                curves.push(o.curve);
            }
            Err(e) => {
                m.status = "failed".into();
                m.errors.push(format!("seed {seed}: {e}"));
            }
        }
    }
    write(a.out.join("curves.csv"), curve_band(&curves))?;
    write(a.out.join("eval.csv"), episodes_csv(&eval_rows))?;
    m.write(&a.out).context("writing manifest")?;
    if !m.errors.is_empty() {
        return Err(CliError::Runtime(anyhow!("training failed: {}", m.errors.join("; "))));
    }
    for c in &curves {
        if let Some(last) = c.last() {
            println!("episode {}: score {:.3} (epsilon {:.3})", last.episode, last.score, last.epsilon);
        }
    }
    let invalid: u32 = eval_rows.iter().map(|r| r.metrics.invalid_action_count).sum();
    println!("trained {} network(s); greedy evaluation invalid actions: {invalid}", curves.len());
    Ok(())
}

/// Applies a suite row to base hyperparameters by parameter name.
pub fn apply_values(base: &Hyperparameters, names: &[String], values: &[f64]) -> Result<Hyperparameters, String> {
    let mut hp = base.clone();
    for (name, &v) in names.iter().zip(values) {
        match name.as_str() {
            "alpha" => hp.alpha = v,
            "gamma" => hp.gamma = v,
            "tau" => hp.tau = v,
            "exploration_fraction" | "explFrac" => hp.exploration_fraction = v,
            "epsilon_min" => hp.epsilon_min = v,
            "epsilon_max" => hp.epsilon_max = v,
            "vf_coef" | "vfCoef" => hp.vf_coef = v,
            "clip_range" => hp.clip_range = v,
            other => return Err(format!("parameter {other:?} is not a DQN hyperparameter")),
        }
    }
    hp.validate().map_err(|e| e.to_string())?;
    Ok(hp)
}

fn suite_csv(space: &ParameterSpace, rows: &[Vec<usize>]) -> String {
    let mut out = String::from("combination");
    for p in &space.parameters {
        out.push(',');
        out.push_str(&p.name);
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&i.to_string());
        for v in space.values(row) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

fn tune(a: TuneArgs) -> Result<()> {
    let config = load_config(&a.config)?;
    let space = ParameterSpace::from_path(&a.space)?;
    let base = hyperparameters(&a.hyper)?;
    let suite = generate_pairwise(&space, a.seed);
    let report = verify_pairwise(&space, &suite.rows);
    if !report.is_complete() {
        return Err(CliError::Runtime(anyhow!("suite misses {} pairs", report.missing.len())));
    }
    create_dir(&a.out)?;
    write(a.out.join("suite.csv"), suite_csv(&space, &suite.rows))?;
    let mut m = manifest("tune", &a.out, &a.config, &config);
    m.policy = Some(a.variant.to_string());
    m.seeds = vec![a.seed];
    println!(
        "suite: {} rows covering {} pairs (full product {})",
        suite.rows.len(),
        space.pair_count(),
        space.product_size()
    );
    if a.suite_only {
        m.write(&a.out).context("writing manifest")?;
        return Ok(());
    }
    let names: Vec<String> = space.parameters.iter().map(|p| p.name.clone()).collect();
    let rows = pool(a.jobs)?.install(|| {
        run_sweep(&space, &suite, a.window, a.seed, |values, seed| {
            let hp = apply_values(&base, &names, values)?;
            let out = train(Arc::clone(&config), &hp, a.variant, seed).map_err(|e| e.to_string())?;
            Ok(out.curve.iter().map(|c| c.score).collect())
        })
    });
    write(a.out.join("sweep.csv"), sweep_csv(&space, &rows))?;
    m.errors = rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("combination {}: {e}", r.combination)))
        .collect();
    if !m.errors.is_empty() {
        m.status = "partial".into();
    }
    m.write(&a.out).context("writing manifest")?;
    for (rank, r) in rows.iter().take(5).enumerate() {
        println!("#{} combination {} {:?}: mean {:.3}", rank + 1, r.combination, r.values, r.mean);
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let config = load_config(&a.config)?;
    let listener = std::net::TcpListener::bind(&a.bind).with_context(|| format!("binding {}", a.bind))?;
    println!("listening on {}", listener.local_addr().context("local address")?);
    storehouse_server::serve(listener, config).context("serving")?;
    Ok(())
}

/// Frames of one episode prefix, separated by blank lines.
pub fn render_frames(config: Arc<WarehouseConfig>, policy: &mut dyn Policy, seed: u64, steps: u64, every: u64) -> String {
    use storehouse_core::policies::PolicyInput;

    let mut env = Env::new(config, seed);
    let mut frames = vec![render(env.sim())];
    for _ in 0..steps {
        if env.is_done() {
            break;
        }
        let (obs, mask) = (env.observe(), env.mask());
        let action = policy.act(PolicyInput {
            sim: env.sim(),
            observation: &obs,
            mask: &mask,
        });
        env.step(action).expect("running episode, action in bounds");
        if env.sim().step().is_multiple_of(every.max(1)) {
            frames.push(render(env.sim()));
        }
    }
    frames.join("\n")
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let config = load_config(&a.config)?;
    let factory = policy_factory(&a.policy, a.checkpoint.as_deref())?;
    let mut policy = factory(a.seed);
    print!("{}", render_frames(config, policy.as_mut(), a.seed, a.steps, a.every));
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let csv = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let title = if a.title.is_empty() {
        a.input.display().to_string()
    } else {
        a.title
    };
    let svg = plot::svg_from_csv(&csv, &title).map_err(|e| CliError::Usage(e.to_string()))?;
    write(a.out, svg)
}
