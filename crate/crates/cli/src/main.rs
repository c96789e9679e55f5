//! `engram`: run simulations, analyses, verification campaigns and graph
//! exports against the engram memory engine.
//!
//! Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O error.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Analysis, AnalyzeArgs, CliError, SimulateArgs};

#[derive(Parser)]
#[command(name = "engram", version, about = "Three-tier engram memory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a manifest; writes trace.txt, snapshot.txt and manifest.txt.
    Simulate {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory, created if missing. Overrides the manifest's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the manifest seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the manifest reset period (0 = never).
        #[arg(long)]
        reset_period: Option<u64>,
    },
    /// Compute memory-effect curves from a trace and/or snapshot; writes CSV and SVG.
    Analyze {
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        analysis: Analysis,
        #[arg(long)]
        out: PathBuf,
        /// Histogram bins for the creation-time density.
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, default_value_t = 20)]
        max_lag: usize,
        /// Age differences above this share one contiguity bin.
        #[arg(long, default_value_t = 100)]
        max_age_diff: u64,
        #[arg(long, default_value_t = 0.1)]
        slack: f64,
        #[arg(long, default_value_t = 200)]
        burn_in: u64,
    },
    /// Differential retrieval fuzzing, count reconstruction and the Hebbian property checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        /// Test fixture: run the engine with newer-first tie-breaking.
        #[arg(long, hide = true)]
        invert_tie_break: bool,
    },
    /// Write the co-firing graph of a snapshot as Graphviz DOT.
    ExportGraph {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        min_weight: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { manifest, out, seed, reset_period } => commands::simulate(SimulateArgs {
            manifest,
            out,
            seed,
            reset_period,
        }),
        Command::Analyze { trace, snapshot, analysis, out, bins, max_lag, max_age_diff, slack, burn_in } => {
            commands::analyze(AnalyzeArgs {
                trace,
                snapshot,
                analysis,
                out,
                bins,
                max_lag,
                max_age_diff,
                slack,
                burn_in,
            })
        }
        Command::Verify { seed, iterations, invert_tie_break } => {
            commands::verify(seed, iterations, invert_tie_break)
        }
        Command::ExportGraph { snapshot, min_weight, out } => {
            commands::export_graph(&snapshot, min_weight, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("engram: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
