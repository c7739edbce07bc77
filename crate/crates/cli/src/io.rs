//! File IO around the core parsers and the binary graph container.

use std::fs;
use std::path::Path;

use raceplan_core::lattice::Lattice;
use raceplan_core::velocity::FrictionScale;
use raceplan_core::ReferenceLine;

use crate::config::{self, ParamsFile};
use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Load a reference-line CSV (track or race line).
pub fn load_reference_line(path: &Path) -> Result<ReferenceLine, CliError> {
    let text = read(path)?;
    ReferenceLine::parse_csv(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Load a race line together with the raw bytes its fingerprint covers.
pub fn load_raceline_with_bytes(path: &Path) -> Result<(ReferenceLine, Vec<u8>), CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::input(format!("{}: not valid UTF-8", path.display())))?;
    let line = ReferenceLine::parse_csv(text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok((line, bytes))
}

pub fn save_graph(lat: &Lattice, path: &Path) -> Result<(), CliError> {
    fs::write(path, lat.to_bytes())
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn load_graph(path: &Path) -> Result<Lattice, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Lattice::from_bytes(&bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn load_friction(path: &Path) -> Result<FrictionScale, CliError> {
    let text = read(path)?;
    FrictionScale::parse_csv(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Params file, or the built-in defaults when no path is given.
pub fn load_params(path: Option<&Path>) -> Result<ParamsFile, CliError> {
    match path {
        None => Ok(ParamsFile::default()),
        Some(p) => {
            let text = read(p)?;
            config::parse_params(&text).map_err(|e| match e {
                CliError::Input(m) => CliError::input(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}
