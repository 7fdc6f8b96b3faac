//! The `cxr-triage` command surface: label reports, generate synthetic
//! images, train the classifier and evaluate scores.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;

use std::path::Path;

pub use args::{Cli, Command};
pub use error::{CliError, Result};

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    cxr_core::io::write_atomic(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Runs one parsed invocation.
pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Label(a) => commands::label::run(&cli.global, a),
        Command::Train(a) => commands::train::run(&cli.global, a),
        Command::Eval(a) => commands::eval::run(&cli.global, a),
        Command::Synth(a) => commands::synth::run(&cli.global, a),
    }
}
