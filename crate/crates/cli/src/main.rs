//! `sfcdist`: fit weight functions, solve the steady state, compute chemical
//! potentials, sample constrained wealth vectors and estimate parameters.
//!
//! Every command writes a `<command>.manifest.json` next to its outputs;
//! `sfcdist replay` re-runs one and checks the outputs are bit-identical.
//!
//! Exit status: 0 success, 2 input or parameter errors, 3 phase or
//! feasibility refusals, 4 numeric anomalies.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EstimateArgs, FitArgs, InputError, MuArgs, NumericAnomaly, SampleArgs, SolveArgs};
use manifest::ReplayMismatch;
use sfcdist::Error;

#[derive(Debug, Parser)]
#[command(name = "sfcdist", version, about = "Stock-flow consistent wealth distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a weight function to a percentile table.
    Fit(FitArgs),
    /// Reduce the steady-state system and report the constant sum.
    Solve(SolveArgs),
    /// Chemical potential and grand-canonical marginal at a density.
    Mu(MuArgs),
    /// Hit-and-run samples on the constant-sum simplex.
    Sample(SampleArgs),
    /// Estimate consumption parameters from income and wealth tables.
    Estimate(EstimateArgs),
    /// Re-run a manifest and verify its outputs.
    Replay {
        manifest: PathBuf,
        /// Write the replayed outputs here instead of over the originals.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::PhaseRefusal { .. } | Error::NoSolution { .. } | Error::EstimationInfeasible => 3,
                Error::ReductionAnomaly { .. }
                | Error::ReductionPattern(_)
                | Error::Resolution { .. }
                | Error::Initialization(_) => 4,
                _ => 2,
            };
        }
        if cause.is::<NumericAnomaly>() || cause.is::<ReplayMismatch>() {
            return 4;
        }
        if cause.is::<InputError>() {
            return 2;
        }
    }
    2
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    let manifest = match command {
        Command::Fit(a) => manifest::run(&a.resolve()?)?,
        Command::Solve(a) => manifest::run(&a.resolve()?)?,
        Command::Mu(a) => manifest::run(&a.resolve()?)?,
        Command::Sample(a) => manifest::run(&a.resolve()?)?,
        Command::Estimate(a) => manifest::run(&a.resolve()?)?,
        Command::Replay { manifest, out_dir } => {
            let m = manifest::replay(&manifest, out_dir)?;
            println!("replay of `{}` matches all {} recorded outputs", m.command, m.outputs.len());
            m
        }
    };
    if let Some(seed) = manifest.seed {
        log::info!("seed {seed}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
