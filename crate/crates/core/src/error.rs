use thiserror::Error;

/// Errors raised by the model and experiment modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("weight vector invariant violated: {0}")]
    InvalidWeights(String),

    #[error("weight vectors not aligned: lengths {left} vs {right} and the shorter carries unresolved tail mass")]
    Alignment { left: usize, right: usize },

    #[error("tail mass selected and no extension rule was supplied")]
    Truncation,

    #[error("time {t} lies outside the materialized partition (0, {horizon}]")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("no jump is active at time {t}")]
    NoActiveJump { t: f64 },

    #[error("time grid must be strictly increasing (violated at index {index})")]
    NonIncreasingGrid { index: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {x}")))
    }
}
