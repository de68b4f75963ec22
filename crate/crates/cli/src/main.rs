//! `ged`: analytics, simulation and figure data for generalized energy
//! detection.

mod args;
mod commands;
mod figures;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Settings};

/// Bad flags, config values or parameter combinations (exit status 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Some validation checks failed (exit status 4).
#[derive(Debug)]
pub struct ValidationFailed(pub usize);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} validation check(s) failed", self.0)
    }
}

impl std::error::Error for ValidationFailed {}

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

fn exit_status(error: &anyhow::Error) -> u8 {
    if error.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else if error.downcast_ref::<ValidationFailed>().is_some() {
        EXIT_VALIDATION
    } else if let Some(core) = error.downcast_ref::<ged_core::Error>() {
        if core.is_numeric_failure() {
            EXIT_NUMERIC
        } else {
            EXIT_USAGE
        }
    } else {
        EXIT_FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Settings::resolve(&cli.params)
        .map_err(anyhow::Error::from)
        .and_then(|settings| commands::run(cli.command, &settings));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("ged {}: error: {error:#}", cli.command.name());
            ExitCode::from(exit_status(&error))
        }
    }
}
