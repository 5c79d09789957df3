use thiserror::Error;

use crate::victims::VictimError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },

    #[error("infeasible confidence threshold {threshold}: acceptance rate {observed_rate:.3e} after {drawn} draws")]
    InfeasibleThreshold {
        threshold: f64,
        observed_rate: f64,
        drawn: usize,
    },

    #[error("numerical failure at step {step}: {reason}")]
    NumericalFailure { step: usize, reason: String },

    #[error("dataset holds a single class for attribute {attr}")]
    SingleClass { attr: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error(transparent)]
    Victim(#[from] VictimError),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TrainingDiverged { .. } | Error::NumericalFailure { .. } | Error::NonFinite(_)
        )
    }
}
