use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sector dimension {dim} exceeds the configured limit {limit}")]
    Capacity { dim: u128, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("basis does not match the sector specification")]
    BasisMismatch,

    #[error("formula inconsistency: {0}")]
    FormulaInconsistency(String),

    #[error("norm drift {drift:.3e} exceeds {limit:.1e}")]
    NormDrift { drift: f64, limit: f64 },

    #[error("step too large: dt*|H| = {stiffness:.3} exceeds stability bound {bound}")]
    StepSize { stiffness: f64, bound: f64 },

    #[error("no transition between the requested states (probability {0:.3e})")]
    NoTransition(f64),

    #[error("phase fit residual {rms:.3e} rad exceeds {limit:.1e} rad")]
    FitQuality { rms: f64, limit: f64 },

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("discretisation did not converge: {0}")]
    Convergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
