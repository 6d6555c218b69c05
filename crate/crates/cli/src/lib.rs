//! Batch front end: read CSV data and a JSON config, run one command,
//! write CSV and JSON results.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod persist;

use std::path::PathBuf;

use args::Command;
use error::CliResult;
use io::{mark_failed, Outputs};

/// Runs a parsed command and writes its outputs.
pub fn execute(command: &Command) -> CliResult<Vec<PathBuf>> {
    let cfg = command.resolve()?;
    let name = command.name();
    let result: CliResult<Outputs> = match command {
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::Fit { .. } => commands::fit(&cfg),
        Command::Cv { .. } => commands::cv(&cfg),
        Command::Bench { .. } => commands::bench(&cfg),
        Command::Spca { .. } => commands::spca(&cfg),
        Command::Predict { .. } => commands::predict(&cfg),
    };
    let out_dir = cfg.out_dir();
    match result.and_then(|out| out.commit(name)) {
        Ok(files) => Ok(files),
        Err(e) => {
            if let Err(marker_err) = mark_failed(&out_dir, name, &e.to_string()) {
                log::error!("could not write failure marker: {marker_err}");
            }
            Err(e)
        }
    }
}
