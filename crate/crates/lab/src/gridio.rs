//! Reading and writing the binary grid container.

use std::fs;
use std::path::Path;

use hessianlab_core::grid::GridFunction;

use crate::CliError;

pub fn read_grid(path: &Path) -> Result<GridFunction, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    GridFunction::from_bytes(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_grid(path: &Path, u: &GridFunction) -> Result<(), CliError> {
    fs::write(path, u.to_bytes()).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}
