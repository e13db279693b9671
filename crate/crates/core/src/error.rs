use thiserror::Error;

use crate::grid::Field;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: n={left_n}, L={left_len} vs n={right_n}, L={right_len}")]
    GridMismatch {
        left_n: usize,
        left_len: f64,
        right_n: usize,
        right_len: f64,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("linear solver breakdown (residual {residual:e})")]
    SolverBreakdown { residual: f64 },
    #[error("blow-up detected at t = {t}; last finite state kept at t = {last_t}")]
    BlowUp {
        t: f64,
        last_t: f64,
        last_state: Box<Field>,
    },
    #[error("modulation left the small-parameter regime at t = {t}: {reason}")]
    RegimeExit { t: f64, reason: String },
    #[error("orthogonality drift {drift:e} at t = {t}")]
    OrthogonalityDrift { t: f64, drift: f64 },
    #[error("shooting bracket failed: achieved y(0) range [{lo}, {hi}] does not contain {target}")]
    Bracketing { lo: f64, hi: f64, target: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics themselves (as opposed to bad input or I/O).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::SolverBreakdown { .. }
                | Error::BlowUp { .. }
                | Error::RegimeExit { .. }
                | Error::OrthogonalityDrift { .. }
                | Error::Bracketing { .. }
                | Error::NonFinite { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NonFinite { .. } => "non_finite",
            Error::NoConvergence { .. } => "no_convergence",
            Error::SolverBreakdown { .. } => "solver_breakdown",
            Error::BlowUp { .. } => "blow_up",
            Error::RegimeExit { .. } => "regime_exit",
            Error::OrthogonalityDrift { .. } => "orthogonality_drift",
            Error::Bracketing { .. } => "bracketing",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
