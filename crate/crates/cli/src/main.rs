//! `cfi` — command-line front end for the chained-interferometer simulator.
//!
//! Subcommands: `probs` (closed form vs simulation report), `sweep`
//! (parameter sweep CSV), `image` (Monte Carlo raster imaging), `geometry`
//! (folded-layout construction and trace validation).
//!
//! Exit codes: 0 success, 2 input error, 3 check/invariant failure.

mod commands;
mod config;
mod output;
mod pgm;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: malformed files, invalid parameters. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// A validated computation failed its check. Exit code 3.
    #[error("{0}")]
    Check(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "cfi",
    version,
    about = "Chained-interferometer simulator and validator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare closed-form probabilities against the amplitude simulation.
    Probs(ProbsArgs),
    /// Sweep a parameter and emit a CSV of outcome probabilities.
    Sweep(SweepArgs),
    /// Image an object mask with Monte Carlo photon counting.
    Image(ImageArgs),
    /// Build and/or trace a folded-apparatus layout.
    Geometry(GeometryArgs),
}

#[derive(Args)]
struct ProbsArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; the report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Sweep specification PARAM:START:END:STEPS with PARAM one of t, N, phi.
    #[arg(long)]
    sweep: String,
    /// Output directory; the CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImageArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Object mask: JSON grid, or ASCII PGM shorthand.
    #[arg(long)]
    mask: PathBuf,
    /// Output directory for the image and stats files.
    #[arg(long)]
    out: PathBuf,
    /// Override the configuration's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configuration's photons per pixel.
    #[arg(long)]
    photons: Option<u32>,
}

#[derive(Args)]
struct GeometryArgs {
    /// Layout file (JSON) to trace.
    #[arg(long, conflicts_with = "canonical")]
    layout: Option<PathBuf>,
    /// Build the canonical layout from spacings S_B S_D S_V.
    #[arg(long, num_args = 3, value_names = ["SB", "SD", "SV"])]
    canonical: Option<Vec<f64>>,
    /// Round count for the canonical layout.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Scale factor applied to the canonical spacings.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Relative tolerance for the trace checks.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Output directory; the trace report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() {
    if let Ok(value) = std::env::var("CFI_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                // Ignore failure: the global pool may already exist.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Probs(args) => commands::probs(&args.config, args.out.as_deref()),
        Command::Sweep(args) => commands::sweep(&args.config, &args.sweep, args.out.as_deref()),
        Command::Image(args) => {
            commands::image(&args.config, &args.mask, &args.out, args.seed, args.photons)
        }
        Command::Geometry(args) => commands::geometry(
            args.layout.as_deref(),
            args.canonical.as_deref(),
            args.n,
            args.scale,
            args.tolerance,
            args.out.as_deref(),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
    }
}
