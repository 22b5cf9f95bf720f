//! `privamp`: privacy-profile sweeps, RDP curves, compositions and exact
//! oracle verification.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error,
//! 3 numerical failure.

mod commands;
mod config;
mod error;
mod output;
mod verify;

use clap::{Parser, Subcommand};
use config::ExperimentArgs;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "privamp", version, about = "Privacy amplification accounting for subsampled mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// δ(ε) over an ε-grid for each method (columns epsilon, delta, clipped, method, group_size).
    Profile(ExperimentArgs),
    /// ρ(α) over an α-grid for each method (columns alpha, rho, method, group_size).
    Rdp(ExperimentArgs),
    /// δ at fixed ε, or ε at fixed δ, after T compositions.
    Compose(ExperimentArgs),
    /// Check oracle fixtures; exits 1 if any check fails.
    OracleVerify {
        /// Fixture files (JSON).
        fixtures: Vec<PathBuf>,
        /// Include the bundled fixtures (the default when nothing else is given).
        #[arg(long)]
        bundled: bool,
        /// Number of random canonical-coupling instances.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn run_table(args: ExperimentArgs, f: fn(&ExperimentArgs) -> Result<output::Table, CliError>) -> Result<(), CliError> {
    let args = args.resolved()?;
    let table = f(&args)?;
    let mut parameters = serde_json::to_value(&args).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(obj) = parameters.as_object_mut() {
        obj.retain(|_, v| !v.is_null());
    }
    output::emit(&table.render(args.format(), &parameters)?, args.out.as_deref())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Profile(a) => run_table(a, commands::profile).map(|_| true),
        Command::Rdp(a) => run_table(a, commands::rdp).map(|_| true),
        Command::Compose(a) => run_table(a, commands::compose).map(|_| true),
        Command::OracleVerify { fixtures, bundled, random, seed, out, workers } => {
            let pool = commands::thread_pool(workers)?;
            let (doc, passed) = verify::oracle_verify(&verify::VerifyArgs { fixtures, bundled, random, seed }, &pool)?;
            let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))?;
            bytes.push(b'\n');
            output::emit(&bytes, out.as_deref())?;
            Ok(passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("privamp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
