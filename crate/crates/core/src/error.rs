use thiserror::Error;

use crate::geometry::SelectionViolation;
use crate::txopt::DinkelbachTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid port selection: {0}")]
    Selection(#[from] SelectionViolation),

    #[error("invalid distance range [{min}, {max}]")]
    InvalidRange { min: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance is not a valid PSD matrix: {0}")]
    InvalidCovariance(String),

    #[error("degenerate transmit trace tr(AQA^H) = 0")]
    DegenerateTrace,

    #[error("Dinkelbach did not converge within {} iterations", .0.iterations)]
    NonConvergence(Box<DinkelbachTrace>),

    #[error("exhaustive search over {count} combinations exceeds cap {cap}")]
    CapExceeded { count: u128, cap: u128 },

    #[error("too few samples: need at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag used on the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::Selection(_) => "invalid_selection",
            Error::InvalidRange { .. } => "invalid_range",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidCovariance(_) => "invalid_covariance",
            Error::DegenerateTrace => "degenerate_trace",
            Error::NonConvergence(_) => "non_convergence",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::Config(_) => "invalid_config",
            Error::Io(_) => "io",
            Error::Json(_) => "config_parse",
            Error::Csv(_) => "csv",
        }
    }
}
