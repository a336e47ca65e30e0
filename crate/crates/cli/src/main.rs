//! Command-line driver for the joint fractional transform experiments:
//! order learning, synthetic and file-based denoising, grid search, runtime
//! benchmarks, and a built-in invariant selftest.
//!
//! Every subcommand resolves its parameters from three layers: command-line
//! flags override values from an optional `--config` JSON file, which
//! override the experiment-protocol defaults. The resolved configuration is
//! echoed into `report.json` next to the results, so a report is always
//! reproducible from itself. Exit codes: 0 on success, 1 for configuration
//! or usage errors, 2 for numerical failures.

mod config;
mod output;
mod run;
mod selftest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Configuration-versus-computation failure split; decides the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files, input data, or output paths. Exit 1.
    Config(String),
    /// The computation itself failed. Exit 2.
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "jfrft",
    version,
    about = "Joint time-vertex fractional transforms with trainable orders",
    after_help = "Set JFRFT_THREADS to cap the worker thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a transform order pair by gradient training
    TransformLearn(TransformLearnArgs),
    /// Denoise a synthetic band-limited signal carrying spectral-corner noise
    DenoiseSynth(DenoiseSynthArgs),
    /// Add corner noise to a CSV time series and denoise it
    DenoiseFile(DenoiseFileArgs),
    /// Exhaustive search over an order lattice on a synthetic instance
    GridSearch(GridSearchArgs),
    /// Time grid search against gradient learning across problem sizes
    BenchRuntime(BenchRuntimeArgs),
    /// Run the built-in invariant checks
    Selftest(SelftestArgs),
}

#[derive(clap::Args)]
pub struct TransformLearnArgs {
    /// Target graph order [default: 0.45]
    #[arg(long)]
    alpha: Option<f64>,
    /// Target time order [default: 0.55]
    #[arg(long)]
    beta: Option<f64>,
    /// Transform layers trained jointly [default: 1]
    #[arg(long)]
    layers: Option<usize>,
    /// Training epochs [default: 1200]
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate [default: 1e-3]
    #[arg(long)]
    lr: Option<f64>,
    /// Seed for the random shift matrix and input signal [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Graph size [default: 20]
    #[arg(long)]
    vertices: Option<usize>,
    /// Time steps [default: 6]
    #[arg(long)]
    steps: Option<usize>,
    /// Per-layer starting orders as `a:b,a:b,...`, one pair per layer
    /// [default: all layers start at 0:0]
    #[arg(long, value_name = "PAIRS")]
    layer_inits: Option<String>,
    /// JSON config file; flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report directory [default: out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct DenoiseSynthArgs {
    /// Rows and columns the noise support overlaps the band [default: 0]
    #[arg(long)]
    overlap: Option<usize>,
    /// Noise deviation per spectral cell [default: 0.2]
    #[arg(long)]
    sigma: Option<f64>,
    /// Filter treatment: fixed, learnable, or wiener [default: fixed]
    #[arg(long)]
    filter: Option<String>,
    /// Training epochs [default: 10000]
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate [default: 5e-3]
    #[arg(long)]
    lr: Option<f64>,
    /// Master seed for the operator, signal, and noise [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Graph size [default: 6]
    #[arg(long)]
    vertices: Option<usize>,
    /// Time steps per block [default: 6]
    #[arg(long)]
    steps: Option<usize>,
    /// Signal blocks [default: 6]
    #[arg(long)]
    blocks: Option<usize>,
    /// True graph order of the synthetic signal [default: 0.55]
    #[arg(long)]
    alpha: Option<f64>,
    /// True time order of the synthetic signal [default: 0.45]
    #[arg(long)]
    beta: Option<f64>,
    /// Band size along the graph axis [default: 4]
    #[arg(long)]
    band_vertex: Option<usize>,
    /// Band size along the time axis [default: 4]
    #[arg(long)]
    band_time: Option<usize>,
    /// Random restarts; the best run is reported [default: 0]
    #[arg(long)]
    restarts: Option<usize>,
    /// JSON config file; flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report directory [default: out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct DenoiseFileArgs {
    /// Input CSV: one row per vertex, complex cells like `1.5+0.25i`
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Columns per block; the column count must be a multiple [default: all
    /// columns form one block]
    #[arg(long)]
    block_len: Option<usize>,
    /// Z-score each vertex row before processing
    #[arg(long)]
    normalize: bool,
    /// Edge-list CSV (`src,dst[,weight]`) building the graph operator;
    /// without it a seeded synthetic operator is used
    #[arg(long, value_name = "FILE")]
    edges: Option<PathBuf>,
    /// Shift built from the graph: adjacency, laplacian, row-norm-adjacency,
    /// sym-norm-adjacency, or norm-laplacian [default: adjacency]
    #[arg(long)]
    shift_kind: Option<String>,
    /// Treat the edge list as directed
    #[arg(long)]
    directed: bool,
    /// Seed for the synthetic graph operator when no edges are given
    /// [default: 0]
    #[arg(long)]
    graph_seed: Option<u64>,
    /// Noise sidecar JSON with sigma, overlap, band, and seed
    #[arg(long, value_name = "FILE")]
    sidecar: Option<PathBuf>,
    /// Noise deviation [default: 0.2]
    #[arg(long)]
    sigma: Option<f64>,
    /// Band/noise overlap [default: 0]
    #[arg(long)]
    overlap: Option<usize>,
    /// Band size along the graph axis [default: half the vertices]
    #[arg(long)]
    band_vertex: Option<usize>,
    /// Band size along the time axis [default: half the block length]
    #[arg(long)]
    band_time: Option<usize>,
    /// Orders the noise is synthesized at, as `a:b` [default: 0.55:0.45]
    #[arg(long, value_name = "A:B")]
    noise_orders: Option<String>,
    /// Filter treatment: fixed, learnable, or wiener [default: fixed]
    #[arg(long)]
    filter: Option<String>,
    /// Training epochs [default: 10000]
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate [default: 5e-3]
    #[arg(long)]
    lr: Option<f64>,
    /// Training seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Require the input to be exactly this shape, as `NxC` total columns
    #[arg(long, value_name = "NxC")]
    expect: Option<String>,
    /// JSON config file; flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report directory [default: out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct GridSearchArgs {
    /// Graph-order lattice as `lo:hi:step` [default: -2:2:0.01]
    #[arg(long, value_name = "LO:HI:STEP")]
    alpha_range: Option<String>,
    /// Time-order lattice as `lo:hi:step` [default: -2:2:0.01]
    #[arg(long, value_name = "LO:HI:STEP")]
    beta_range: Option<String>,
    /// Per-cell filter: fixed or wiener [default: wiener]
    #[arg(long)]
    policy: Option<String>,
    /// Noise/band overlap of the synthetic instance [default: 0]
    #[arg(long)]
    overlap: Option<usize>,
    /// Noise deviation [default: 0.2]
    #[arg(long)]
    sigma: Option<f64>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Graph size [default: 6]
    #[arg(long)]
    vertices: Option<usize>,
    /// Time steps per block [default: 6]
    #[arg(long)]
    steps: Option<usize>,
    /// Signal blocks [default: 6]
    #[arg(long)]
    blocks: Option<usize>,
    /// True graph order [default: 0.55]
    #[arg(long)]
    alpha: Option<f64>,
    /// True time order [default: 0.45]
    #[arg(long)]
    beta: Option<f64>,
    /// Band size along the graph axis [default: 4]
    #[arg(long)]
    band_vertex: Option<usize>,
    /// Band size along the time axis [default: 4]
    #[arg(long)]
    band_time: Option<usize>,
    /// JSON config file; flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report directory [default: out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct BenchRuntimeArgs {
    /// Problem sizes as `NxT,NxT,...` [default: 10x10,15x15,20x20]
    #[arg(long, value_name = "SIZES")]
    sizes: Option<String>,
    /// Methods: JFRFT-search, JFRFT-learn, GFRFT-search, GFRFT-learn
    /// [default: all four]
    #[arg(long, value_name = "TAGS")]
    methods: Option<String>,
    /// Training epochs for learn methods [default: 1200]
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate for learn methods [default: 1e-3]
    #[arg(long)]
    lr: Option<f64>,
    /// Search lattice step over [-2, 2] [default: 0.1]
    #[arg(long)]
    step: Option<f64>,
    /// Blocks per synthetic instance [default: 2]
    #[arg(long)]
    blocks: Option<usize>,
    /// Noise deviation [default: 0.3]
    #[arg(long)]
    sigma: Option<f64>,
    /// Runs per measurement; the median is kept [default: 3]
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report directory [default: out]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SelftestArgs {
    /// Seed for the randomized checks [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("JFRFT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.parse().map_err(|_| {
        CliError::Config(format!("JFRFT_THREADS must be a thread count, got '{raw}'"))
    })?;
    if threads == 0 {
        return Err(CliError::Config("JFRFT_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool setup failed: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Includes the grammar for usage errors.
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Err(err) = init_threads() {
        eprintln!("{err}");
        return ExitCode::from(err.exit_code());
    }
    let outcome = match cli.command {
        Command::TransformLearn(args) => run::transform_learn(&args),
        Command::DenoiseSynth(args) => run::denoise_synth(&args),
        Command::DenoiseFile(args) => run::denoise_file(&args),
        Command::GridSearch(args) => run::grid_search_cmd(&args),
        Command::BenchRuntime(args) => run::bench_runtime(&args),
        Command::Selftest(args) => selftest::run(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
