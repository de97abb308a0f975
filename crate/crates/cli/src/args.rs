//! Command-line arguments.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use selfconsist_core::planner::PlanMethod;

use crate::report::OutputFormat;

#[derive(Debug, Parser)]
#[command(name = "selfconsist", version, about = "Estimate LLM self-consistency error and plan sampling budgets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a call budget into prompts × calls per prompt.
    Plan(PlanArgs),
    /// Monte Carlo run of the estimator on a synthetic domain.
    Simulate(SimulateArgs),
    /// Check the analytic inequalities numerically.
    Verify(VerifyArgs),
    /// Estimate the error from recorded or live labels.
    Estimate(EstimateArgs),
    /// Compare budget splits by simulation.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exhaustive,
    Rounded,
}

impl From<Method> for PlanMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Exhaustive => PlanMethod::Exhaustive,
            Method::Rounded => PlanMethod::Rounded,
        }
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Total number of calls available.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, value_enum, default_value_t = Method::Exhaustive)]
    pub method: Method,
    /// Allow an odd number of calls per prompt.
    #[arg(long)]
    pub allow_odd_n: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Also write plan.json and manifest.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write report.json, trials.csv and manifest.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores). Does not affect results.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Write one replicate's labels as a replay file.
    #[arg(long)]
    pub replay_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0, requires = "replay_out")]
    pub replay_replicate: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 256)]
    pub max_n: u64,
    /// Probability grid resolution: p = i/grid.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub grid: u32,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["replay", "external"])))]
pub struct EstimateArgs {
    /// Line-delimited JSON replay file.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Command line of a process speaking the label protocol.
    #[arg(long, requires = "draws")]
    pub external: Option<String>,
    /// Prompt ids to request from the external source (comma separated).
    #[arg(long, value_delimiter = ',', requires = "external")]
    pub prompts: Vec<String>,
    /// File with one prompt id per line.
    #[arg(long, requires = "external")]
    pub prompts_file: Option<PathBuf>,
    /// Calls per prompt for the external source.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub draws: Option<u64>,
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    /// Maximum requests in flight.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub window: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    pub classes: u32,
    /// Keep a random subset: `m=K` prompts and/or `n=K` responses per prompt.
    #[arg(long, num_args = 1..=2, value_name = "m=K n=K")]
    pub subsample: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    /// `auto`, or a comma-separated list like `1x144,12x12`.
    #[arg(long, default_value = "auto")]
    pub splits: String,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write sweep.json, sweep.csv and manifest.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Let the planner rows use an odd number of calls per prompt.
    #[arg(long)]
    pub allow_odd_n: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}
