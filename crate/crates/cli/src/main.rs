//! `netexp` — spillover-contained network experimentation from the
//! command line: graph generation, balanced clustering, bucket
//! assignment, spillover simulation, and treatment-effect analysis.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "netexp", version, about = "Spillover-contained network experimentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list.
    GenGraph(GenGraphArgs),
    /// Cluster a graph into randomization units and report quality.
    Cluster(ClusterArgs),
    /// Compute quality metrics for an existing partition.
    Metrics(MetricsArgs),
    /// Hash a partition's clusters into experiment buckets.
    Assign(AssignArgs),
    /// Run the spillover simulation sweep.
    Simulate(SimulateArgs),
    /// Estimate treatment effects from a bucket-level CSV.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config file with flat key-value defaults; explicit flags win.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenGraphArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Graph kind: `ws` (Watts-Strogatz) or `multibehavior`.
    #[arg(value_parser = ["ws", "multibehavior"])]
    kind: String,
    /// Node count (ws).
    #[arg(long)]
    n: Option<usize>,
    /// Ring-neighbor count, even (ws).
    #[arg(short, long)]
    k: Option<usize>,
    /// Rewiring probability (ws).
    #[arg(short, long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Behavior interaction file `src dst behavior_id strength` (multibehavior).
    #[arg(long)]
    input: Option<std::path::PathBuf>,
    /// Behavior weights as `id:weight,id:weight,...` (multibehavior).
    #[arg(long)]
    weights: Option<String>,
    /// Output edge-list path.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input edge-list path.
    #[arg(long)]
    graph: Option<std::path::PathBuf>,
    /// `balanced-louvain`, `louvain`, or `lpa`.
    #[arg(long)]
    algorithm: Option<String>,
    /// Size balance factor α (balanced-louvain).
    #[arg(long)]
    alpha: Option<f64>,
    /// Maximum cluster size; negative disables the hard split.
    #[arg(long)]
    n_max: Option<i64>,
    /// Resolution γ.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Large-cluster threshold θ (lpa).
    #[arg(long)]
    theta: Option<usize>,
    /// Sweep cap (lpa).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Max-cluster bound used for the ctrl flag; defaults to n_max / θ.
    #[arg(long)]
    ctrl_threshold: Option<usize>,
    /// Reference variance for the composite score.
    #[arg(long)]
    sigma_max: Option<f64>,
    /// Output partition path.
    #[arg(long)]
    out_partition: Option<std::path::PathBuf>,
    /// Output quality-report JSON path (stdout if omitted).
    #[arg(long)]
    out_report: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    graph: Option<std::path::PathBuf>,
    #[arg(long)]
    partition: Option<std::path::PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Max-cluster bound used for the ctrl flag.
    #[arg(long)]
    ctrl_threshold: Option<usize>,
    /// Reference variance for the composite score.
    #[arg(long)]
    sigma_max: Option<f64>,
    #[arg(long)]
    out_report: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Partition file (`node_id<TAB>cluster_id`).
    #[arg(long)]
    partition: Option<std::path::PathBuf>,
    /// Bucket count B.
    #[arg(long)]
    buckets: Option<u32>,
    /// Treatment bucket list, e.g. `0` or `0,1,2`.
    #[arg(long)]
    treat: Option<String>,
    /// Control bucket list.
    #[arg(long)]
    ctrl: Option<String>,
    #[arg(long)]
    salt: Option<u64>,
    /// Output assignment manifest JSON.
    #[arg(long)]
    out_assignment: Option<std::path::PathBuf>,
    /// Output per-node bucket file.
    #[arg(long)]
    out_buckets: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// `paper` runs the reference 900-cell study setup.
    #[arg(long)]
    preset: Option<String>,
    /// Node count per network.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated mean degrees, one network each.
    #[arg(long)]
    k_list: Option<String>,
    /// Rewiring probability.
    #[arg(long)]
    p: Option<f64>,
    /// Number of evenly spaced perturbation levels.
    #[arg(long)]
    r_levels: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    buckets: Option<u32>,
    #[arg(long)]
    treat: Option<String>,
    #[arg(long)]
    ctrl: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    s_prob: Option<f64>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-cell CSV output path.
    #[arg(long)]
    out_csv: Option<std::path::PathBuf>,
    /// Fit summary JSON path (stdout if omitted).
    #[arg(long)]
    out_fits: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Bucket CSV `bucket_id,arm,y,n,x1,...`.
    #[arg(long)]
    input: Option<std::path::PathBuf>,
    /// Comma-separated subset of `dim,cuped,cupac`.
    #[arg(long)]
    estimators: Option<String>,
    /// Covariate index used by CUPED.
    #[arg(long)]
    cuped_covariate: Option<usize>,
    /// Cross-fitting fold count K for CUPAC.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Historical bucket CSV for covariate selection.
    #[arg(long)]
    history: Option<std::path::PathBuf>,
    /// Absolute-correlation threshold for covariate selection.
    #[arg(long)]
    select_threshold: Option<f64>,
    /// Output JSON path (stdout if omitted).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

/// Usage problems exit 2, data problems exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<netexp_core::Error> for CliError {
    fn from(e: netexp_core::Error) -> Self {
        match e {
            netexp_core::Error::InvalidParameter(msg) => CliError::Usage(msg),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenGraph(args) => commands::gen_graph(args),
        Command::Cluster(args) => commands::cluster(args),
        Command::Metrics(args) => commands::metrics(args),
        Command::Assign(args) => commands::assign(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Analyze(args) => commands::analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
