//! `qumode`: config-driven front end for qumode probe simulations.
//!
//! Every subcommand reads one TOML config, runs a deterministic pipeline and
//! writes either a TOML report (which embeds the resolved config, so it can be
//! fed back through `--config`) or a CSV table.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Format;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "qumode", version, about = "Spectral readout of a quantum system through a qumode probe")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact spectral lines of the configured state.
    Spectrum(Common),
    /// Seeded measurement record of the probe momentum.
    Sample(Common),
    /// Spectral lines estimated from a measurement record.
    Reconstruct(WithRecord),
    /// Partition function, free energy, heat capacity and entropy.
    Thermo(WithRecord),
    /// Average and irreversible work of a sudden quench.
    Quench(Common),
    /// Ground-state overlap of two Hamiltonians.
    Overlap(Common),
    /// Table over a grid of inverse temperatures or couplings.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides `sampling.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct WithRecord {
    #[command(flatten)]
    common: Common,
    /// Measurement record written by `sample`; sampled in-process when omitted.
    #[arg(long, value_name = "PATH")]
    record: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, record) = match &cli.command {
        Command::Spectrum(c) | Command::Sample(c) | Command::Quench(c) | Command::Overlap(c) | Command::Sweep(c) => {
            (c, None)
        }
        Command::Reconstruct(r) | Command::Thermo(r) => (&r.common, r.record.as_deref()),
    };
    let cfg = commands::resolve(config::load(&common.config)?, common.seed)?;
    let text = match &cli.command {
        Command::Spectrum(_) => commands::spectrum(&cfg, common.format)?,
        Command::Sample(_) => commands::sample(&cfg)?,
        Command::Reconstruct(_) => commands::reconstruct(&cfg, record, common.format)?,
        Command::Thermo(_) => commands::thermo(&cfg, record, common.format)?,
        Command::Quench(_) => commands::quench(&cfg, common.format)?,
        Command::Overlap(_) => commands::overlap(&cfg, common.format)?,
        Command::Sweep(_) => commands::sweep(&cfg, common.format)?,
    };
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qumode: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
