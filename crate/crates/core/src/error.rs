use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("frequency spacing {spacing} is invalid: {reason}")]
    InvalidSpacing { spacing: f64, reason: String },

    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid does not cover the ball of radius {radius}")]
    GridDoesNotCoverBall { radius: f64 },

    #[error("grid under-resolves frequency scale {lambda}: step {step} exceeds {max_step}")]
    UnderResolvedGrid { lambda: f64, step: f64, max_step: f64 },

    #[error("quadrature did not reach tolerance {tol:e} within {budget} subintervals (estimate {estimate:e})")]
    QuadratureBudget { tol: f64, budget: usize, estimate: f64 },

    #[error("invalid time sequence: {0}")]
    InvalidSequence(String),

    #[error("{0} out of range")]
    OutOfRange(String),

    #[error("invalid stage: {0}")]
    InvalidStage(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
