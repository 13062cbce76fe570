use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use avgwave_core::applications::synth::{SynthKind, DEFAULT_NEIGHBORS};
use avgwave_core::partition::DEFAULT_CUT_FRACTION;

mod commands;
mod outputs;

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

/// Average-interpolating wavelets on graphs and point clouds.
///
/// A run directory collects the graph (`graph.tsv`, `vertex_weights.txt`),
/// the eigenbasis (`basis.bin`), optional coordinates (`points.csv`) and the
/// partition tree (`tree.txt`). Every command writes a `.manifest` file next
/// to its output.
#[derive(Parser, Debug)]
#[command(name = "avgwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset into a directory.
    Synth(SynthArgs),
    /// Build the graph and its eigenbasis into a run directory.
    Laplacian(LaplacianArgs),
    /// Build the partition tree and neighbor lists.
    Partition(PartitionArgs),
    /// Signal file to pyramid file.
    Forward(ForwardArgs),
    /// Pyramid file to signal file.
    Inverse(InverseArgs),
    /// Scaling function of one tree node, as CSV with coordinates.
    Scaling(ScalingArgs),
    /// Zero fine-level coefficients (or small ones with --threshold).
    Denoise(DenoiseArgs),
    /// Estimate a signal from `vertex,value` samples.
    Regress(RegressArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// interval, sphere, swiss_roll, s_manifold or planar_bulbs.
    kind: SynthKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Nearest neighbors for point-cloud graphs.
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["edges", "points"])))]
struct LaplacianArgs {
    /// Edge list with a `#vertices N` header.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Point cloud CSV; builds a Gaussian kNN graph.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Vertex weights, one per line (edge-list input only).
    #[arg(long, requires = "edges")]
    vertex_weights: Option<PathBuf>,
    /// Use degrees as vertex weights when no weight file is given.
    #[arg(long, requires = "edges", conflicts_with = "vertex_weights")]
    degree_weights: bool,
    /// Coordinates to keep for plotting (edge-list input only).
    #[arg(long, requires = "edges")]
    coords: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    k: usize,
    /// Defaults to min(N−1, 300).
    #[arg(long)]
    n_eigs: Option<usize>,
    /// Smoothness exponent, or `auto` to estimate it from eigenvalue growth.
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long)]
    dir: PathBuf,
    /// Defaults to ⌊log₂ N⌋.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value_t = 1)]
    neighbor_order: usize,
    #[arg(long, default_value_t = DEFAULT_CUT_FRACTION)]
    cut_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    /// Extra eigenfunctions reproduced exactly by the interpolation.
    #[arg(long, default_value_t = 0)]
    moments: usize,
    /// Ridge factor added to the kernel block, e.g. 1e-10.
    #[arg(long)]
    ridge: Option<f64>,
}

#[derive(Args, Debug)]
struct ForwardArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    signal: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args, Debug)]
struct InverseArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    pyramid: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    node: usize,
    #[arg(long)]
    out: PathBuf,
    /// Keep the unnormalized values instead of scaling to max |value| = 1.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    signal: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Coefficients below parents at this level or deeper are zeroed.
    /// Defaults to ⌊5·l_max/9⌋.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Hard-threshold coefficients by magnitude instead of by level.
    #[arg(long, conflicts_with = "cutoff")]
    threshold: Option<f64>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args, Debug)]
struct RegressArgs {
    #[arg(long)]
    dir: PathBuf,
    /// CSV of `vertex,value` rows.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solve: SolveArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    panic::set_hook(Box::new(|_| {}));
    let outcome = panic::catch_unwind(|| commands::run(&cli.command));
    let _ = panic::take_hook();
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
            eprintln!("error code={code} kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::from(code)
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            eprintln!("error code={EXIT_INTERNAL} kind=internal message={message:?}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
