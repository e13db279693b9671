//! `gkdv-lab`: named experiment recipes over `gkdv-core`, with on-disk artifacts and reports.
//!
//! A run directory always holds `meta.json` (resolved config and versions) and, on success,
//! `checks.json`; a failed run holds `error.json` instead.

pub mod config;
pub mod recipes;
pub mod report;
pub mod runner;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{ConfigError, Experiment, ExperimentConfig};

/// Exit statuses of the CLI.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERIC: i32 = 3;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured − expected| ≤ tol`
    Near,
    /// `measured ≤ tol`
    AtMost,
    /// `measured ≥ tol`
    AtLeast,
}

/// One measured quantity against its threshold. Informational checks are reported but
/// never change the exit status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tol: f64,
    pub comparison: Comparison,
    pub pass: bool,
    #[serde(default)]
    pub informational: bool,
}

impl Check {
    pub fn near(name: &str, measured: f64, expected: f64, tol: f64) -> Check {
        let pass = (measured - expected).abs() <= tol;
        Check { name: name.into(), measured, expected, tol, comparison: Comparison::Near, pass, informational: false }
    }

    pub fn at_most(name: &str, measured: f64, tol: f64) -> Check {
        Check { name: name.into(), measured, expected: 0.0, tol, comparison: Comparison::AtMost, pass: measured <= tol, informational: false }
    }

    pub fn at_least(name: &str, measured: f64, tol: f64) -> Check {
        Check { name: name.into(), measured, expected: tol, tol, comparison: Comparison::AtLeast, pass: measured >= tol, informational: false }
    }

    pub fn informational(mut self) -> Check {
        self.informational = true;
        self
    }

    /// True unless this is a gating check that failed.
    pub fn ok(&self) -> bool {
        self.pass || self.informational
    }
}

/// Everything that can stop a run, with its exit status.
#[derive(Debug)]
pub enum LabError {
    Config(String),
    Core(gkdv_core::Error),
    MissingArtifact(String),
    CorruptArtifact(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(e) if e.is_numeric() => exit::NUMERIC,
            _ => exit::USAGE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Config(_) => "config",
            LabError::Core(e) => e.kind(),
            LabError::MissingArtifact(_) => "missing_artifact",
            LabError::CorruptArtifact(_) => "corrupt_artifact",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(m) => write!(f, "config: {m}"),
            LabError::Core(e) => write!(f, "{e}"),
            LabError::MissingArtifact(m) => write!(f, "missing artifact: {m}"),
            LabError::CorruptArtifact(m) => write!(f, "corrupt artifact: {m}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<gkdv_core::Error> for LabError {
    fn from(e: gkdv_core::Error) -> Self {
        LabError::Core(e)
    }
}

impl From<ConfigError> for LabError {
    fn from(e: ConfigError) -> Self {
        LabError::Config(e.0)
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Core(e.into())
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
