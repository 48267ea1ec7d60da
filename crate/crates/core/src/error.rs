use thiserror::Error;

use crate::quantizer::ScalarQuantizer;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Lloyd iteration hit its cap; `last` holds the final iterate.
    #[error("quantizer design did not converge after {iterations} iterations (last movement {movement:e})")]
    QuantizerDesign {
        iterations: usize,
        movement: f64,
        last: Box<ScalarQuantizer>,
    },

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
