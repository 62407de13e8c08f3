//! Command-line harness: schedule and threshold optimization, reference
//! table reproduction, distortion evaluation and path export.
//!
//! Exit codes: 0 success, 1 reproduction failure on a gated table,
//! 2 invalid input, 3 optimizer non-convergence.

mod commands;
mod output;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "fbm-sampling",
    about = "Optimal sampling designs for fractional Brownian motion under a sample budget",
    version
)]
struct Cli {
    /// Worker threads for Monte Carlo batches (env FBM_SAMPLING_THREADS,
    /// default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a deterministic sampling schedule.
    OptimizeDet(commands::optimize_det::Args),
    /// Optimize a level-triggered threshold policy by stochastic
    /// approximation.
    OptimizeLevel(commands::optimize_level::Args),
    /// Recompute the bundled reference tables and compare.
    ReproduceTables(commands::reproduce::Args),
    /// Evaluate the distortion of a given schedule or policy.
    Distortion(commands::distortion::Args),
    /// Write one simulated trajectory as CSV.
    Simulate(commands::simulate::Args),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_REPRODUCTION_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

fn main() {
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("FBM_SAMPLING_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(threads) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            std::process::exit(EXIT_INVALID);
        }
    }

    let code = match cli.command {
        Command::OptimizeDet(args) => commands::optimize_det::run(&args),
        Command::OptimizeLevel(args) => commands::optimize_level::run(&args),
        Command::ReproduceTables(args) => commands::reproduce::run(&args),
        Command::Distortion(args) => commands::distortion::run(&args),
        Command::Simulate(args) => commands::simulate::run(&args),
    };
    let code = match code {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    };
    std::process::exit(code);
}
