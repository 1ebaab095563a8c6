mod commands;
mod error;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "chess-billiard", version, about = "Chess billiard dynamics and internal-wave spectral tools")]
struct Cli {
    /// Directory receiving output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Use the full 10000-point grid instead of the desk-scale default.
    #[arg(long, global = true)]
    full: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate the boundary map from one start point; writes orbit.csv.
    Orbit(OrbitArgs),
    /// Rotation number over a lambda grid; writes sweep.csv and plateaus.json.
    Sweep(SweepArgs),
    /// Closed-form spectral solve; writes solution_t*.csv, grid_t*.csv, regularity.json.
    Solve(SolveArgs),
    /// Continued-fraction diagnostics of a rotation number; writes diophantine.json.
    Diophantine(DiophantineArgs),
    /// Staircase dimension of a sweep CSV; writes staircase.json.
    Staircase(StaircaseArgs),
    /// Staircase dimension of tilted squares against angle; writes tilt.csv.
    Tilt(TiltArgs),
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    /// Domain JSON file; the unit square when omitted.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub lambda: f64,
    /// Start point as a boundary fraction.
    #[arg(long, default_value_t = 0.1)]
    pub s0: f64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Named configuration (fig5, fig7-trapezoid, fig7-tilted, fig7-rounded).
    #[arg(long)]
    pub preset: Option<String>,
    /// Domain JSON file; overrides the preset domain.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Mappings per lambda value.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[command(flatten)]
    pub plateau: PlateauArgs,
}

#[derive(Debug, Args, Clone)]
pub struct PlateauArgs {
    #[arg(long)]
    pub plateau_tol: Option<f64>,
    #[arg(long)]
    pub min_run: Option<usize>,
    /// Largest denominator reported for a locked rational.
    #[arg(long)]
    pub plateau_q_max: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Forced,
    IcCorrected,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisArg {
    Periodic,
    Sine,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Forcing coefficients as JSON: {"K": .., "entries": [{"k1","k2","re","im"}]}.
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Forced)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = BasisArg::Periodic)]
    pub basis: BasisArg,
    /// Comma-separated output times.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub times: Vec<f64>,
    /// Truncation; defaults to the field's own.
    #[arg(long)]
    pub k: Option<usize>,
    /// Physical grid size of the grid dumps.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Sobolev exponent of the forcing.
    #[arg(long, default_value_t = 4.0)]
    pub s: f64,
    /// Diophantine exponent.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = chess_billiard::spectral::DEFAULT_STABILITY_SLACK)]
    pub slack: f64,
}

#[derive(Debug, Args)]
pub struct DiophantineArgs {
    /// Rotation number to analyze.
    #[arg(long, conflicts_with = "lambda", required_unless_present = "lambda")]
    pub r: Option<f64>,
    /// Square lambda, mapped to its rotation number first.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub q_max: u64,
}

#[derive(Debug, Args)]
pub struct StaircaseArgs {
    /// Sweep CSV produced by the sweep command.
    #[arg(long)]
    pub sweep: PathBuf,
    /// Comma-separated tile sizes.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[command(flatten)]
    pub plateau: PlateauArgs,
}

#[derive(Debug, Args)]
pub struct TiltArgs {
    /// Named configuration (fig8); used by default.
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma-separated tilt angles in radians.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub angles: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[command(flatten)]
    pub plateau: PlateauArgs,
}

pub struct Globals {
    pub out: PathBuf,
    pub full: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))?;
    }
    let g = Globals { out: cli.out, full: cli.full };
    match cli.command {
        Command::Orbit(a) => commands::orbit(&g, a),
        Command::Sweep(a) => commands::sweep(&g, a),
        Command::Solve(a) => commands::solve(&g, a),
        Command::Diophantine(a) => commands::diophantine(&g, a),
        Command::Staircase(a) => commands::staircase(&g, a),
        Command::Tilt(a) => commands::tilt(&g, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
