mod commands;
mod config;
mod exit;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use critfail::lp::Backend;
use critfail::netmodel::{MassDistribution, TopologyFormat};
use critfail::robustdesign::{PredictorSpec, UpgradeMode};
use critfail::routing::Scheme;

#[derive(Debug, Parser)]
#[command(name = "critfail", version, about = "Failure-impact evaluation and robust network design")]
pub struct Cli {
    /// TOML file of `key = value` defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for scenario sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory output files are written to.
    #[arg(long, global = true, env = "CRITFAIL_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// LP solver backend: sparse or dense.
    #[arg(long, global = true, default_value = "sparse")]
    pub backend: Backend,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random topology and gravity traffic matrix.
    Gen(GenArgs),
    /// Route the failure-free instance and write the routing and link loads.
    Route(RouteArgs),
    /// Enumerate connected failure scenarios.
    Failures(FailuresArgs),
    /// Sweep failure impacts into an impact table.
    Impact(ImpactArgs),
    /// Label an impact table (or predictions) and select the critical set.
    Critical(CriticalArgs),
    /// Write the predictor input graph and training labels.
    Encode(EncodeArgs),
    /// Worst-case validation over the failure set.
    Validate(ValidateArgs),
    /// Minimum-cost capacity upgrade keeping every scenario uncongested.
    Upgrade(UpgradeArgs),
    /// Link-protection traffic engineering over the critical set.
    Te(TeArgs),
    /// Aggregate tables from files written by the other subcommands.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub nodes: usize,
    #[arg(long, default_value_t = 3.5)]
    pub mean_degree: f64,
    #[arg(long, default_value_t = 0.4)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub capacity: f64,
    /// Draw capacities from {1/4, 1/2, 3/4, 1} x capacity.
    #[arg(long)]
    pub random_capacities: bool,
    /// Total traffic volume of the gravity matrix.
    #[arg(long, default_value_t = 1.0)]
    pub tm_total: f64,
    #[arg(long, default_value = "log-uniform", value_parser = parse_masses)]
    pub masses: MassDistribution,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Edge list (`u v capacity`) or GraphML file.
    #[arg(long)]
    pub topology: PathBuf,
    /// Topology format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<TopologyFormat>,
    /// Traffic matrix file (`src dst volume` per line).
    #[arg(long, conflicts_with = "tm_total")]
    pub tm: Option<PathBuf>,
    /// Generate a gravity traffic matrix of this total volume instead.
    #[arg(long, requires = "seed")]
    pub tm_total: Option<f64>,
    #[arg(long, default_value = "log-uniform", value_parser = parse_masses)]
    pub masses: MassDistribution,
    /// Seed for generated traffic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "mcf")]
    pub routing: Scheme,
}

#[derive(Debug, Args)]
pub struct FailuresArgs {
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long)]
    pub format: Option<TopologyFormat>,
    /// Maximum number of simultaneous link failures.
    #[arg(long, default_value_t = 2)]
    pub f: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Oracle,
    Simplified,
}

#[derive(Debug, Args)]
pub struct ImpactArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "mcf")]
    pub routing: Scheme,
    #[arg(long, default_value_t = 2)]
    pub f: usize,
    #[arg(long, value_enum, default_value = "oracle")]
    pub method: Method,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "impact.csv")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Impact table written by `impact`.
    #[arg(long, required_unless_present = "predictions", conflicts_with = "predictions")]
    pub impact: Option<PathBuf>,
    /// Predictions CSV (`scenario_id,impact_pred,critical_prob`).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value = "critical.csv")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "mcf")]
    pub routing: Scheme,
    #[arg(long, default_value_t = 2)]
    pub f: usize,
    /// Impact table to label from; computed with the exact oracle when absent.
    #[arg(long)]
    pub impact: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "mcf")]
    pub routing: Scheme,
    #[arg(long, default_value_t = 2)]
    pub f: usize,
    /// oracle, oracle-mcf, oracle-ospf, simplified or file:<path>.
    #[arg(long, default_value = "oracle")]
    pub predictor: PredictorSpec,
    /// Number of top-ranked scenarios to verify exactly.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct UpgradeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 2)]
    pub f: usize,
    #[arg(long, default_value = "oracle")]
    pub predictor: PredictorSpec,
    #[arg(long, default_value = "pruned", value_parser = parse_mode)]
    pub mode: UpgradeMode,
    /// Round added capacity up to a multiple of this unit.
    #[arg(long)]
    pub rounding: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub max_iterations: usize,
    /// Skip re-checking the plan on the full scenario set.
    #[arg(long)]
    pub no_certify: bool,
}

#[derive(Debug, Args)]
pub struct TeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Routing the critical set is measured under.
    #[arg(long, default_value = "mcf")]
    pub routing: Scheme,
    #[arg(long, default_value_t = 2)]
    pub f: usize,
    #[arg(long, default_value = "oracle")]
    pub predictor: PredictorSpec,
    /// Re-solves allowed during certification.
    #[arg(long, default_value_t = 20)]
    pub max_iterations: usize,
    /// Certification bound: a number, or `critical` for the plan's own
    /// critical-set MLU.
    #[arg(long, default_value = "1")]
    pub target: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Impact tables for the impact-ratio distribution.
    #[arg(long, num_args = 1..)]
    pub impact: Vec<PathBuf>,
    /// Oracle and simplified impact tables to compare, in that order.
    #[arg(long, num_args = 2, value_names = ["ORACLE", "SIMPLIFIED"])]
    pub compare: Vec<PathBuf>,
    /// JSON summaries from validate, upgrade or te.
    #[arg(long, num_args = 1..)]
    pub plan: Vec<PathBuf>,
    /// Width of the impact-ratio histogram bins.
    #[arg(long, default_value_t = 0.05)]
    pub bin_width: f64,
}

fn parse_masses(s: &str) -> Result<MassDistribution, String> {
    match s {
        "log-uniform" => Ok(MassDistribution::LogUniform),
        "uniform" => Ok(MassDistribution::Uniform),
        other => Err(format!("unknown mass distribution `{other}` (expected log-uniform|uniform)")),
    }
}

fn parse_mode(s: &str) -> Result<UpgradeMode, String> {
    match s {
        "pruned" => Ok(UpgradeMode::Pruned),
        "full" => Ok(UpgradeMode::Full),
        other => Err(format!("unknown upgrade mode `{other}` (expected pruned|full)")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().collect();
    ExitCode::from(exit::run(args))
}
