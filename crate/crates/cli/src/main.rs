//! `lpmix`: configuration-driven runs, verification suites, spectra and
//! parameter sweeps.
//!
//! Exit codes: 0 success, 1 a check or sweep point failed, 2 invalid
//! configuration or usage, 3 runtime or I/O error.

mod checks;
mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Options, Status};
use crate::config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "lpmix", version, about = "Passive-scalar mixing runs with Littlewood-Paley diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate and write diagnostics and snapshots.
    Simulate(Common),
    /// Run the configured checks; exit 1 if any fails.
    Verify(Common),
    /// Band-wise variance spectrum and compensated plateau.
    Spectrum(Common),
    /// Verify every point of the `[sweep]` parameter grid.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output root; overrides LPMIX_OUT_DIR and `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress and summaries on stdout.
    #[arg(long)]
    quiet: bool,
}

fn dispatch(command: &Command, common: &Common) -> anyhow::Result<Status> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let opts = Options { out: common.out.clone(), quiet: common.quiet };
    match command {
        Command::Simulate(_) => commands::simulate(&cfg, &opts),
        Command::Verify(_) => commands::verify_cmd(&cfg, &opts),
        Command::Spectrum(_) => commands::spectrum(&cfg, &opts),
        Command::Sweep(_) => commands::sweep(&cfg, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Simulate(c) | Command::Verify(c) | Command::Spectrum(c) | Command::Sweep(c) => c,
    };
    let level = if common.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli.command, common) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed(names)) => {
            eprintln!("failed: {}", names.join(", "));
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
