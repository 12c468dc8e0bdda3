mod commands;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use slimnoc::Exec;

#[derive(Parser, Debug)]
#[command(name = "slimnoc", version, about = "Slim NoC construction, layout, cost and simulation")]
pub struct Cli {
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    /// Output file; defaults to stdout unless an output directory is set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Directory for outputs when --out is not given.
    #[arg(long, global = true, env = "SLIMNOC_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub cmd: Command,
}

impl Cli {
    pub fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the addition and multiplication tables of GF(q).
    Field {
        #[arg(long)]
        q: usize,
    },
    /// Build a topology, or list the Slim NoC splits of a node count.
    Generate(GenerateArgs),
    /// Place routers on the die grid.
    Layout(NetArgs),
    /// Route wires and check the per-cell wiring budget.
    Wiring(WiringArgs),
    /// Wire length and buffer totals.
    Cost(CostArgs),
    /// Routing tables, VC policy and deadlock check.
    Route(RouteArgs),
    /// Run one simulation.
    Simulate(SimulateArgs),
    /// Run a load-latency sweep.
    Sweep(SweepArgs),
    /// Compare presets on cost, wiring and performance.
    Compare(CompareArgs),
    /// Merge earlier CSV outputs into per-metric tables.
    Report(ReportArgs),
    /// List the named configurations.
    Presets,
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyChoice {
    Slimnoc,
    Torus,
    Mesh,
    Fbf,
    Pfbf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct NetArgs {
    /// Named configuration; overrides the topology flags.
    #[arg(long)]
    pub preset: Option<String>,
    /// Topology JSON written by `generate`.
    #[arg(long, conflicts_with = "preset")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "slimnoc")]
    pub topology: TopologyChoice,
    #[arg(long)]
    pub q: Option<usize>,
    /// Nodes per router.
    #[arg(long)]
    pub p: Option<usize>,
    /// Router rows (sub-grid rows for pfbf).
    #[arg(long)]
    pub rows: Option<usize>,
    /// Router columns (sub-grid columns for pfbf).
    #[arg(long)]
    pub cols: Option<usize>,
    /// Partitions along x and y for pfbf.
    #[arg(long, default_value_t = 2)]
    pub px: usize,
    #[arg(long, default_value_t = 2)]
    pub py: usize,
    /// basic, subgr, gr, rand[:seed] or grid.
    #[arg(long)]
    pub layout: Option<String>,
    /// Virtual channels.
    #[arg(long)]
    pub vc: Option<usize>,
    /// json, csv or dot where the command supports it.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    /// Total node count; lists feasible Slim NoC splits instead of building.
    #[arg(long = "N", conflicts_with_all = ["q", "preset"])]
    pub n: Option<usize>,
    #[command(flatten)]
    pub net: NetArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct WiringArgs {
    #[command(flatten)]
    pub net: NetArgs,
    /// Technology node in nm: 45, 22 or 11.
    #[arg(long, default_value_t = 45)]
    pub tech: u32,
    /// Wires per link.
    #[arg(long, default_value_t = 128)]
    pub link_width: usize,
    /// Count wires (links x width) or bare links per cell.
    #[arg(long, default_value = "wires")]
    pub count: String,
    /// Also write per-cell counts as CSV next to the verdict.
    #[arg(long)]
    pub grid_csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BufferArgs {
    /// Grid hops covered per link cycle.
    #[arg(long = "H", default_value_t = 1)]
    pub h: usize,
    /// Link bandwidth in flits per cycle.
    #[arg(long, default_value_t = 1.0)]
    pub b_over_l: f64,
    /// Central buffer size in flits.
    #[arg(long, default_value_t = 20)]
    pub cb: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CostArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub buffers: BufferArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct RouteArgs {
    #[command(flatten)]
    pub net: NetArgs,
    /// Include the full next-hop tables.
    #[arg(long)]
    pub tables: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimArgs {
    /// EB-Small, EB-Large, EB-Var-S, EB-Var-N, CBR-<flits> or EL-Links.
    #[arg(long, default_value = "EB-Var-N")]
    pub buffering: String,
    /// RND, SHF, REV, ADV1 or ADV2.
    #[arg(long, default_value = "RND")]
    pub pattern: String,
    /// Replay a `cycle,src,dst,flits[,kind]` CSV instead of a pattern.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Answer trace requests with reply packets.
    #[arg(long)]
    pub reply: bool,
    #[arg(long = "H", default_value_t = 1)]
    pub h: usize,
    /// Measured cycles.
    #[arg(long, default_value_t = 10_000)]
    pub cycles: u64,
    #[arg(long, default_value_t = 1_000)]
    pub warmup: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Flits per packet.
    #[arg(long, default_value_t = 6)]
    pub flits: usize,
    /// Use the mean wire length for every link.
    #[arg(long)]
    pub average_links: bool,
    /// Cycles a flit may wait before the run is reported as stalled.
    #[arg(long, default_value_t = 50_000)]
    pub stall_bound: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Offered load in flits per node per cycle.
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    /// Include per-packet records.
    #[arg(long)]
    pub packets: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Ascending offered loads.
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4")]
    pub rates: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct CompareArgs {
    /// Comma-separated preset names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub presets: Vec<String>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    pub rates: Vec<f64>,
    #[arg(long, default_value_t = 45)]
    pub tech: u32,
    #[arg(long, default_value_t = 128)]
    pub link_width: usize,
    #[arg(long, default_value_t = 20)]
    pub cb: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    /// CSV files or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// csv writes one table per metric; json writes one merged document.
    #[arg(long, default_value = "csv")]
    pub format: String,
}

/// Errors with a dedicated exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<slimnoc::sim::SimError>() {
            return match e {
                slimnoc::sim::SimError::Stall { .. } => 4,
                slimnoc::sim::SimError::Setup(_) => 3,
            };
        }
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Usage(_) => 2,
                CliError::Invalid(_) => 3,
                CliError::MissingInput(_) => 1,
            };
        }
        if cause.is::<slimnoc::topo::TopoError>()
            || cause.is::<slimnoc::layout::LayoutError>()
            || cause.is::<slimnoc::cost::CostError>()
            || cause.is::<slimnoc::route::RouteError>()
            || cause.is::<slimnoc::sim::SetupError>()
            || cause.is::<slimnoc::presets::PresetError>()
            || cause.is::<slimnoc::ff::FieldError>()
        {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match commands::dispatch(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
