use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "fdflow",
    version,
    about = "Compile and run explicit finite-difference PDE specifications"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a specification and write dumps, metrics and traces
    Run(RunArgs),
    /// Time the tree-walking baseline against the optimised sequential executor
    Bench(BenchArgs),
    /// Compare two field dumps
    Compare(CompareArgs),
    /// Print the kernel programs and cost model of a specification
    Listing(SpecArgs),
    /// Check a specification and print its diagnostics
    Check(SpecArgs),
    /// Write the exact solution of a 1D single-mode problem as a dump
    Analytic(AnalyticArgs),
    /// Emit a 1D or 2D slice of a dump as CSV
    PlotCsv(PlotCsvArgs),
    /// Run one rank of a multi-process distributed run
    #[command(hide = true)]
    RankWorker(WorkerArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Sequential block traversal
    Seq,
    /// Fork-join lanes with a barrier per step phase
    Forkjoin,
    /// Task dataflow without global barriers
    Task,
    /// Distributed ranks, one lane each
    DistPure,
    /// Distributed ranks with fork-join lanes
    DistForkjoin,
    /// Distributed ranks with task lanes and communication tasks
    DistTask,
}

impl Mode {
    pub fn is_dist(self) -> bool {
        matches!(self, Mode::DistPure | Mode::DistForkjoin | Mode::DistTask)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Seq => "seq",
            Mode::Forkjoin => "forkjoin",
            Mode::Task => "task",
            Mode::DistPure => "dist-pure",
            Mode::DistForkjoin => "dist-forkjoin",
            Mode::DistTask => "dist-task",
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct GridArgs {
    /// Row alignment in bytes (power of two, at least 8)
    #[arg(long, default_value_t = 64)]
    pub alignment: usize,
    /// Vector length in doubles; rows are padded to a multiple of it
    #[arg(long, default_value_t = 8)]
    pub vector_size: usize,
    /// Last-level cache size in bytes used by the blocking planner
    #[arg(long, default_value_t = 33 << 20)]
    pub l3_size: usize,
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    /// Specification file
    #[arg(long)]
    pub spec: PathBuf,
    /// Execution mode
    #[arg(long, value_enum, default_value_t = Mode::Seq)]
    pub mode: Mode,
    /// Execution lanes (per rank in distributed modes)
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Number of ranks for distributed modes
    #[arg(long, default_value_t = 1)]
    pub ranks: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Frontier blocks per communication task along each face axis
    #[arg(long, default_value_t = 4)]
    pub comm_blocks: usize,
    /// Explicit rank grid such as 2x2x1 (defaults to a balanced factorisation)
    #[arg(long)]
    pub rank_grid: Option<String>,
    /// Run this many steps instead of the count in the input file
    #[arg(long)]
    pub steps_override: Option<usize>,
    /// Write the final fields to this dump file
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Also dump every N steps to <dump>.<step> (single-rank modes)
    #[arg(long)]
    pub dump_every: Option<usize>,
    /// Write key=value metrics to this file
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Write the task schedule trace to this file (task and dist-task modes)
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Abort with exit status 1 when a non-finite value appears
    #[arg(long)]
    pub check_finite: bool,
    /// Compare the final fields against this reference dump
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Absolute tolerance for --compare (0 means bitwise)
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    /// Time levels task chains may run ahead of the oldest unfinished step
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    /// Seconds to wait for any single message before failing
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    /// Do not print the metrics table
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    /// Specification file
    #[arg(long)]
    pub spec: PathBuf,
    /// Run this many steps instead of the count in the input file
    #[arg(long)]
    pub steps_override: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Write key=value results to this file
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct CompareArgs {
    /// First dump
    pub a: PathBuf,
    /// Second dump
    pub b: PathBuf,
    /// Absolute tolerance (0 means bitwise)
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
}

#[derive(Clone, Debug, Args)]
pub struct SpecArgs {
    /// Specification file
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnalyticKindArg {
    /// Diffusion decay: coefficient is the diffusivity
    Heat,
    /// Translation: coefficient is the velocity
    Advection,
}

#[derive(Clone, Debug, Args)]
pub struct AnalyticArgs {
    /// Specification file
    #[arg(long)]
    pub spec: PathBuf,
    /// Solution family
    #[arg(long, value_enum)]
    pub kind: AnalyticKindArg,
    /// Diffusivity or velocity
    #[arg(long)]
    pub coef: f64,
    /// Field to generate (defaults to the first field)
    #[arg(long)]
    pub field: Option<String>,
    /// Evaluate after this many steps instead of the count in the input file
    #[arg(long)]
    pub steps_override: Option<usize>,
    /// Output dump file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct PlotCsvArgs {
    /// Dump file
    #[arg(long)]
    pub dump: PathBuf,
    /// Field to emit
    #[arg(long)]
    pub field: String,
    /// Component of a vector field
    #[arg(long, default_value_t = 0)]
    pub component: usize,
    /// Z index of the slice for 3D fields (defaults to the middle plane)
    #[arg(long)]
    pub slice: Option<usize>,
    /// Output file (defaults to standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct WorkerArgs {
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub socket_dir: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}
