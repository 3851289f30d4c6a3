//! Command-line front end: one TOML config per run, CSV/JSON outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, Command, Config};
pub use error::{CliError, CliResult};

#[derive(Debug, Clone, Parser)]
#[command(name = "rddmk", version, about = "Bagged local kriging of manifold-valued spatial data")]
pub struct Invocation {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces `run.seed`.
    #[arg(long)]
    pub seed_override: Option<u64>,
    /// Replaces `run.workers`.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Replaces `output.dir`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Parses the config, applies command-line overrides and runs the command.
/// Returns the files written.
pub fn execute(inv: &Invocation) -> CliResult<Vec<PathBuf>> {
    let mut cfg = parse_config(&inv.config, inv.command)?;
    if let Some(seed) = inv.seed_override {
        cfg.run.master_seed = seed;
    }
    if let Some(w) = inv.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        cfg.run.workers = w;
    }
    if let Some(dir) = &inv.out_dir {
        cfg.output.dir = dir.clone();
    }
    commands::dispatch(inv.command, &cfg)
}
