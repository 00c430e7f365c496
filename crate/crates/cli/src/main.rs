//! `vln-attack`: reproducible experiments on generated navigation worlds.
//!
//! Landmark phrases are passed in by the caller (`--landmarks`); nothing here
//! parses free-form instructions.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// A caller mistake: bad flags, missing inputs, unwritable outputs.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "vln-attack", version, about = "Route manipulation experiments on generated navigation worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded world and write it as a graph directory.
    GenEnv(GenEnvArgs),
    /// Plan a route for a landmark sequence.
    Plan(PlanArgs),
    /// Select and modify nodes so the planner ends at the target.
    Attack(AttackArgs),
    /// Noise-sensitivity detection: a sigma sweep over a clean/modified pair,
    /// or verdicts for every image of one graph.
    Detect(DetectArgs),
    /// Route metrics for one attack, or for a batch of seeded scenarios.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
pub struct GenEnvArgs {
    #[arg(long)]
    pub seed: u64,
    /// 40 and 80 give the small and large settings.
    #[arg(long, default_value_t = 40)]
    pub nodes: usize,
    #[arg(long, default_value_t = 4)]
    pub landmarks: usize,
    /// Half-width of the per-pixel rendering noise.
    #[arg(long)]
    pub noise_amplitude: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated landmark phrases, in instruction order.
    #[arg(long)]
    pub landmarks: String,
    #[arg(long)]
    pub start: u32,
    #[arg(long, default_value_t = vln_attack::planner::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = vln_attack::planner::DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    /// Plan JSON destination; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub start: u32,
    #[arg(long)]
    pub target: u32,
    #[arg(long)]
    pub landmarks: String,
    /// Directory for the modified graph and `attack_report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long, requires = "modified", conflicts_with = "graph")]
    pub clean: Option<PathBuf>,
    #[arg(long, requires = "clean")]
    pub modified: Option<PathBuf>,
    /// Comma-separated values, or `log:LO:HI:COUNT`.
    #[arg(long, default_value = "log:1e-7:1e-1:13")]
    pub sigmas: String,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    pub sigma: Option<f64>,
    #[arg(long, requires = "graph")]
    pub threshold: Option<f64>,
    /// Comma-separated node ids to flag as a path.
    #[arg(long, requires = "graph")]
    pub path: Option<String>,
    #[arg(long, default_value_t = vln_attack::detector::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for a sweep; JSON file (or stdout) for one graph.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long, requires_all = ["attacked_graph", "attack_report"], conflicts_with = "batch")]
    pub clean_graph: Option<PathBuf>,
    #[arg(long)]
    pub attacked_graph: Option<PathBuf>,
    #[arg(long)]
    pub attack_report: Option<PathBuf>,
    /// Defaults to the landmarks recorded in the attack report.
    #[arg(long)]
    pub landmarks: Option<String>,
    #[arg(long)]
    pub start: Option<u32>,
    /// Run this many seeded scenarios instead of evaluating files.
    #[arg(long, conflicts_with = "config")]
    pub batch: Option<usize>,
    /// Batch experiment config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// First scenario seed in batch mode.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub nodes: usize,
    #[arg(long = "landmark-count", default_value_t = 4)]
    pub landmark_count: usize,
    #[arg(long, default_value_t = vln_attack::planner::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = vln_attack::planner::DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    /// Output directory; single evaluations print JSON to stdout without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<vln_attack::Error>() {
        Some(e) if e.is_usage() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenEnv(a) => commands::gen_env(&a),
        Command::Plan(a) => commands::plan(&a),
        Command::Attack(a) => commands::attack(&a),
        Command::Detect(a) => commands::detect(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
