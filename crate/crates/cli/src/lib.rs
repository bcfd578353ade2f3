//! `restoro` command-line interface.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or validation
//! failure, 3 capability limit or infeasible request.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use restoro_core::Error;

pub const SEED_ENV: &str = "RESTORO_SEED";

#[derive(Debug, Parser)]
#[command(name = "restoro", about = "Restoration planning and neural surrogates for interdependent networks")]
#[command(disable_version_flag = true)]
pub struct Cli {
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for dataset labelling and trade-off runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print the crate and file format versions.
    #[arg(long)]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic network.
    GenNetwork(GenNetwork),
    /// Generate seeded damage scenarios.
    GenScenarios(GenScenarios),
    /// Solve one scenario and write the plan and its cost breakdown.
    Solve(Solve),
    /// Label scenarios with the solver.
    BuildDataset(BuildDataset),
    /// Train one surrogate per resource cap.
    Train(Train),
    /// Report AR accuracy of trained surrogates on a dataset.
    Evaluate(Evaluate),
    /// Solver vs surrogate recovery time across resource caps.
    Tradeoff(Tradeoff),
    /// Export the recovery operator and block aggregates of a model.
    Operator(Operator),
}

#[derive(Debug, Args)]
pub struct GenNetwork {
    /// Named preset; `shelby-like` is 49 water, 16 gas and 60 power nodes.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Comma-separated node count per layer.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenScenarios {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub magnitude: u8,
    /// Number of original scenarios.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Augmented copies per original.
    #[arg(long, default_value_t = 0)]
    pub augment: usize,
    /// Inclusive flip-count range, `lo,hi`.
    #[arg(long, value_delimiter = ',', default_value = "1,5")]
    pub flips: Vec<usize>,
    /// Override the damage rate of the chosen magnitude.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Enable spatial correlation with this length.
    #[arg(long)]
    pub correlation_length: Option<f64>,
    #[arg(long)]
    pub damage_arcs: bool,
    #[arg(long, default_value = "damaged_is_1")]
    pub encoding: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = restoro_core::solver::DEFAULT_T_MAX)]
    pub tmax: u32,
    #[arg(long, default_value = "iterative")]
    pub mode: String,
    #[arg(long, default_value_t = 12)]
    pub exact_max_damaged: usize,
    #[arg(long, default_value_t = 6)]
    pub exact_max_t: u32,
}

#[derive(Debug, Args)]
pub struct Solve {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Line of the scenario file to solve (0-based).
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long)]
    pub rc: u32,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Plan CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Cost CSV; defaults to the plan path with a `.cost.csv` suffix.
    #[arg(long)]
    pub costs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildDataset {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Resource caps: `5`, `2,4,6` or `2..8`.
    #[arg(long)]
    pub rc: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "damaged_is_1")]
    pub encoding: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Train {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Resource caps to train; each uses the dataset records with that cap.
    #[arg(long)]
    pub rc: String,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "400,400,400")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value = "relu")]
    pub activation: String,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.1)]
    pub validation_fraction: f64,
    /// Restrict the loss to damaged nodes.
    #[arg(long)]
    pub masked: bool,
    #[arg(long, default_value_t = restoro_core::solver::DEFAULT_T_MAX)]
    pub tmax: u32,
    /// Output directory for `model_rc<R>.txt` files.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Evaluate {
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Resource caps to evaluate; defaults to every cap in the dataset.
    #[arg(long)]
    pub rc: Option<String>,
    /// AR margins.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    pub ar: Vec<u32>,
    /// Optional CSV copy of the accuracy table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Tradeoff {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long, default_value = "2..8")]
    pub rc: String,
    /// Use only the first N scenarios of the file.
    #[arg(long)]
    pub count: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Operator {
    #[arg(long)]
    pub model: PathBuf,
    /// Network supplying the layer partition of the node vector.
    #[arg(long)]
    pub network: PathBuf,
    /// Operator heatmap CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Block aggregate CSV (single-hidden-layer models only).
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
    /// Sum signed weights instead of magnitudes.
    #[arg(long)]
    pub signed: bool,
    /// Scenarios used to report the operator's R^2 against the full model.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => 1,
        Error::Capability(_) | Error::Infeasible(_) => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match config::merge(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cli.version {
        println!("restoro {}", env!("CARGO_PKG_VERSION"));
        for (what, tag) in restoro_core::FORMAT_VERSIONS {
            println!("{what}: {tag}");
        }
        return 0;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no subcommand given (see --help)");
        return 2;
    };
    let seed = match resolve_seed(cli.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| commands::dispatch(command, seed)),
        Err(e) => Err(Error::InvalidArgument(format!("cannot start worker pool: {e}"))),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Flag, then `RESTORO_SEED`, then 0.
fn resolve_seed(flag: Option<u64>) -> restoro_core::Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}
