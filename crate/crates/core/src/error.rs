use thiserror::Error;

/// Errors raised by the inference, acquisition and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("index {index} out of range (rank {rank})")]
    Index { index: usize, rank: usize },

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("optimization diverged at iteration {iteration}: {reason}")]
    Optimization { iteration: usize, reason: String },

    #[error("ill-conditioned system: {0}")]
    Conditioning(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("intensity {value} exceeds the thinning bound {bound}")]
    BoundViolation { value: f64, bound: f64 },
}

impl Error {
    /// Stable category string, used by the CLI when reporting failures.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Domain { .. } => "domain",
            Error::Index { .. } => "index",
            Error::DegenerateKernel(_) => "degenerate-kernel",
            Error::Optimization { .. } => "optimization",
            Error::Conditioning(_) => "conditioning",
            Error::Numeric(_) => "numeric",
            Error::BoundViolation { .. } => "bound-violation",
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
