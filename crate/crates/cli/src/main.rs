//! Command-line front end for the stereo obstacle-avoidance pipeline.
//!
//! Exit codes: 0 on success, 1 for computation-level failures (e.g. a bench
//! determinism mismatch), 2 for usage and I/O errors.

mod commands;
mod draw;
mod errors;

use clap::{Parser, Subcommand};

use errors::CliError;

#[derive(Parser)]
#[command(
    name = "stereo-avoid",
    about = "Stereo block-matching depth, region distillation, and fuzzy steering",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a stereo pair: disparity, depth, region
    /// minima, and a steering command.
    Depth(commands::DepthArgs),
    /// Print the nine region minimum depths for a stereo pair.
    Regions(commands::RegionsArgs),
    /// Compute a steering command from nine region depths.
    Steer(commands::SteerArgs),
    /// Evaluate a fuzzy rule base on crisp inputs.
    FuzzyEval(commands::FuzzyEvalArgs),
    /// Build and validate a depth-refinement lookup table from CSV.
    Lut(commands::LutArgs),
    /// Run a closed-loop simulation episode.
    Sim(commands::SimArgs),
    /// Benchmark the fused pipeline across worker counts.
    Bench(commands::BenchArgs),
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Depth(args) => commands::depth(args),
        Command::Regions(args) => commands::regions(args),
        Command::Steer(args) => commands::steer(args),
        Command::FuzzyEval(args) => commands::fuzzy_eval(args),
        Command::Lut(args) => commands::lut(args),
        Command::Sim(args) => commands::sim(args),
        Command::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
        Err(CliError::Compute(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
