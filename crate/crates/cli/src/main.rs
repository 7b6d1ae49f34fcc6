//! `trajfda` command-line interface.
//!
//! Exit status: 0 on success, 1 for usage and validation errors, 2 for
//! numerical failures.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use trajfda::io::RunConfig;
use trajfda::{Error, Result};

use args::Cli;

const THREADS_VAR: &str = "TRAJFDA_THREADS";

fn configure_threads() -> Result<()> {
    let threads = match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_VAR} must be a non-negative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for (key, value) in cli.command.overrides() {
        cfg.set(key, &value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    let cfg = load_config(cli)?;
    commands::run(&cli.command, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::GridMismatch(_)) {
                eprintln!("hint: curves on differing time grids must go through `trajfda ingest` first");
            }
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
