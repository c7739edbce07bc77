//! Scenario simulator and file formats around the `raceplan-core` planner:
//! reference-line / graph / friction file IO, the line-oriented scenario
//! grammar, a synthetic airfield track generator, the closed-loop simulator
//! with CSV traces and an SVG overview plot, and a planning-cycle benchmark.

pub mod bench;
pub mod config;
pub mod io;
pub mod sim;
pub mod svg;
pub mod track;

use std::fmt;

/// CLI-level error with the exit-code split the interface promises:
/// input errors exit 3, degraded planning outcomes exit 2.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Degraded(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 3,
            CliError::Degraded(_) => 2,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn degraded(msg: impl Into<String>) -> Self {
        CliError::Degraded(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Degraded(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
