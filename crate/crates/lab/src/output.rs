//! Report files: a JSON envelope with the resolved configuration and build
//! identifier, plus plain CSV tables.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// `git describe` output captured at build time, or the package version.
pub const BUILD_ID: &str = env!("HESSIANLAB_BUILD_ID");

#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub build: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub passed: bool,
    pub result: &'a R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(command: &'a str, config: &'a C, passed: bool, result: &'a R) -> Self {
        Envelope {
            tool: "hessianlab",
            version: env!("CARGO_PKG_VERSION"),
            build: BUILD_ID,
            command,
            config,
            passed,
            result,
        }
    }
}

/// Pretty JSON with a trailing newline. Non-finite floats serialize as `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_report<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_json(value)?).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<f64>>) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
