use thiserror::Error;

use crate::sequence::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("protocol error: {} violation(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Protocol(Vec<Violation>),

    #[error("capacity exceeded: {requested} qubits requested, limit is {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("index {index} out of range for {len} atoms")]
    OutOfRange { index: usize, len: usize },

    #[error("degenerate fringe: fitted offset {offset:e} is not positive")]
    DegenerateFringe { offset: f64 },

    #[error("fit did not converge after {iterations} iterations (rms {residual_rms:e})")]
    FitNotConverged { iterations: usize, residual_rms: f64 },

    #[error("threshold estimation did not converge; bracket [{lo}, {hi}]")]
    Estimation { lo: f64, hi: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config:\n{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Config(Vec<crate::cli::config::ConfigError>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
