//! Command-line front end for the collective-perception pipeline.
//!
//! Subcommands: `voxelize` (cloud to wire file), `inspect` (wire file
//! stats), `simulate` (scenario to report and dumps), `forward` (wire files
//! plus weights to a BEV dump), `evaluate` (detection/ground-truth JSONL to
//! an AP table), and `bench` (operation timings on synthetic data).
//!
//! Exit codes: 0 success, 2 usage error, 1 data error (with one
//! machine-readable JSON error line on stderr). The `S2S_LOG` environment
//! variable sets the log level.

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Default seed for weight initialization and synthetic data.
const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "s2s", version, about = "Collective perception on sparse voxel grids")]
struct Cli {
    /// Cap worker parallelism (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Comma-separated triples are meters unless stated otherwise.
#[derive(Subcommand)]
enum Command {
    /// Voxelize a point cloud file into a wire-format sparse voxel grid.
    Voxelize(VoxelizeArgs),
    /// Print the header and stats of a wire-format grid file.
    Inspect(InspectArgs),
    /// Run a scenario: sense, exchange, fuse, and report.
    Simulate(SimulateArgs),
    /// Run the fusion network on ego + collective wire files.
    Forward(ForwardArgs),
    /// Compute average precision from detection and ground-truth JSONL.
    Evaluate(EvaluateArgs),
    /// Time voxelize/scatter/convolution on synthetic sizes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Voxel size sx,sy,sz.
    #[arg(long, value_parser = commands::parse_f32_triple, default_value = "0.05,0.05,0.10")]
    voxel: [f32; 3],
    /// Grid extent ex,ey,ez (mutually exclusive with --dims).
    #[arg(long, value_parser = commands::parse_f32_triple, conflicts_with = "dims")]
    extent: Option<[f32; 3]>,
    /// Voxel counts nx,ny,nz.
    #[arg(long, value_parser = commands::parse_u32_triple)]
    dims: Option<[u32; 3]>,
    /// Grid origin (minimum corner) x,y,z.
    #[arg(long, value_parser = commands::parse_f32_triple, default_value = "-140,-40,-3", allow_hyphen_values = true)]
    origin: [f32; 3],
    /// Use the desk-scale test grid (64x64x8 cells of 0.5 m at origin
    /// -16,-16,-1) instead of the full-scale defaults.
    #[arg(long)]
    desk: bool,
}

#[derive(Args)]
struct VoxelizeArgs {
    /// Input point cloud (.xyz text or raw binary by extension).
    #[arg(long = "in")]
    input: PathBuf,
    /// Force the input format.
    #[arg(long, value_parser = ["xyz", "bin"])]
    format: Option<String>,
    /// Output wire-format grid file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct InspectArgs {
    /// Wire-format grid file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Emit stats as one JSON object instead of text lines.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario spec (JSON; scene path resolved relative to it).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for the report and dumps.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Weight file; omitted: initialize from --seed.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Weight-initialization seed when no file is given.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Dump the fused BEV map per frame (bev_NNN.bin).
    #[arg(long)]
    dump_bev: bool,
    /// Dump each vehicle's sensed cloud per frame (`cloud_NNN_{id}.xyz`).
    #[arg(long)]
    dump_clouds: bool,
    /// Dump each vehicle's wire-format grid per frame (`grid_NNN_{id}.svx`).
    #[arg(long)]
    dump_grids: bool,
    /// Also write per-vehicle rows as report.csv.
    #[arg(long)]
    csv: bool,
    /// Keep wall-clock timings in report.json (breaks byte-reproducibility).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ForwardArgs {
    /// Ego wire-format grid file.
    #[arg(long)]
    ego: PathBuf,
    /// Collective wire-format grid files (repeatable; none = empty stream).
    #[arg(long)]
    collective: Vec<PathBuf>,
    /// Weight file; omitted: initialize from --seed.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Save the (possibly seeded) weights for reuse.
    #[arg(long)]
    save_weights: Option<PathBuf>,
    /// Output BEV dump file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Detections, JSON lines (one frame per line).
    #[arg(long)]
    dets: PathBuf,
    /// Ground truths, JSON lines.
    #[arg(long)]
    gts: PathBuf,
    /// Classes to evaluate (default: all five).
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
    /// Evaluation range x0,x1,y0,y1,z0,z1 applied to box centers.
    #[arg(long, value_parser = commands::parse_range6, allow_hyphen_values = true)]
    range: Option<[f64; 6]>,
    /// Skip range filtering entirely.
    #[arg(long)]
    no_range_filter: bool,
    /// Also write the results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Timing repetitions per operation (best run reported).
    #[arg(long, default_value_t = 3)]
    iters: u32,
    /// Synthetic cloud size for voxelize.
    #[arg(long, default_value_t = 200_000)]
    points: usize,
    /// Active sites for scatter/convolution.
    #[arg(long, default_value_t = 20_000)]
    sites: usize,
    /// Channels for scatter/convolution.
    #[arg(long, default_value_t = 16)]
    channels: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("S2S_LOG")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("could not cap thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Voxelize(args) => commands::voxelize(args),
        Command::Inspect(args) => commands::inspect(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Forward(args) => commands::forward(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Bench(args) => commands::bench(args),
    };
    if let Err(e) = result {
        // one machine-readable error line, then a data-error exit
        eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
        std::process::exit(1);
    }
}
