use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use superfractal::Error;

mod commands;
mod config;

/// Deterministic, random, and V-variable fractal sets and measures from
/// iterated function systems.
#[derive(Parser)]
#[command(name = "superfractal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a single-IFS attractor to PGM
    Render(RenderArgs),
    /// Random iteration over V screens, dumping frames and an index log
    Superrun(SuperrunArgs),
    /// Solve for fractal dimension in one of four regimes
    Dimension(DimensionArgs),
    /// Monte Carlo table of code-tree cylinder measures vs the product law
    Treestats(TreestatsArgs),
    /// Fractal interpolation graph as SVG/CSV
    Interp(InterpArgs),
    /// Space-filling-curve approximant as SVG/CSV
    Spacefill(SpacefillArgs),
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's mode; deterministic when neither is set
    #[arg(long, value_enum)]
    mode: Option<RenderMode>,
    /// Required by the chaos modes
    #[arg(long)]
    seed: Option<u64>,
    /// Hutchinson steps (deterministic) or chaos-game points
    #[arg(long)]
    iterations: Option<u64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum RenderMode {
    Deterministic,
    ChaosSet,
    ChaosMeasure,
}

#[derive(Args)]
struct SuperrunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    /// Dump frames every STRIDE steps
    #[arg(long, default_value_t = 1)]
    stride: u64,
    #[arg(long, value_enum, default_value_t = SuperMode::Sets)]
    mode: SuperMode,
}

#[derive(Copy, Clone, ValueEnum)]
enum SuperMode {
    Sets,
    Measures,
}

#[derive(Args)]
struct DimensionArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    regime: Regime,
    /// Optional directory for dimension.csv (+ gamma_evals.csv when vvariable)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Screens for the vvariable regime; defaults to the config's v_count
    #[arg(long = "v-count")]
    v_count: Option<usize>,
    /// Steps per Lyapunov-exponent estimate (vvariable)
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bisection tolerance on the dimension (vvariable)
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Regime {
    Moran,
    Random,
    Homogeneous,
    Vvariable,
}

#[derive(Args)]
struct TreestatsArgs {
    #[arg(long)]
    out: PathBuf,
    /// Branching factor M
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Component count N
    #[arg(long = "n-comps", default_value_t = 2)]
    n_comps: usize,
    /// Screens V
    #[arg(long = "v-count", default_value_t = 16)]
    v_count: usize,
    /// Code-tree depth (cylinder order is depth + 1); capped at 3
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    /// Comma-separated component probabilities; uniform when omitted
    #[arg(long)]
    probs: Option<String>,
}

#[derive(Args)]
struct InterpArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Expansion depth; defaults to the largest power of M ≤ 4096 vertices
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct SpacefillArgs {
    /// superIFS description; the built-in pair of filling systems when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Approximant depth k (3^k segments)
    #[arg(long)]
    depth: Option<usize>,
    /// Tree-chain steps; defaults to depth, 0 forces the constant tree
    #[arg(long)]
    iterations: Option<u64>,
}

fn main() -> ExitCode {
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Render(a) => commands::render(a),
        Command::Superrun(a) => commands::superrun(a),
        Command::Dimension(a) => commands::dimension(a),
        Command::Treestats(a) => commands::treestats(a),
        Command::Interp(a) => commands::interp(a),
        Command::Spacefill(a) => commands::spacefill(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidInput(_) => 2,
                Error::Numerical(_) => 3,
                Error::Io(_) => 1,
            })
        }
    }
}

/// SUPERFRACTAL_THREADS caps the worker pool. Results never depend on it:
/// all parallel reductions in the library preserve order.
fn init_threads() -> Result<(), String> {
    match std::env::var("SUPERFRACTAL_THREADS") {
        Ok(text) => {
            let n: usize = text.parse().map_err(|_| {
                format!("SUPERFRACTAL_THREADS must be a positive integer, got '{text}'")
            })?;
            if n == 0 {
                return Err("SUPERFRACTAL_THREADS must be ≥ 1".to_string());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("thread pool: {e}"))
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(format!("SUPERFRACTAL_THREADS: {e}")),
    }
}
