//! Std companion to `hessianlab-core`: sparse LU, grid files, parallel
//! campaign execution, report output and the `hessianlab` command line.

pub mod cli;
pub mod gridio;
pub mod output;
pub mod parallel;
pub mod sparse;

use std::fmt;

/// Failures surfaced by the command line, grouped by exit class.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Io(String),
    Solver(String),
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => cli::EXIT_NONCONVERGENCE,
            _ => cli::EXIT_CONFIG,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Solver(m) => write!(f, "solver: {m}"),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}
