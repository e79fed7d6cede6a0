use thiserror::Error;

use crate::matcore::DenseMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("data length {len} does not match {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },

    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("strong RRQR exceeded its swap cap of {cap}")]
    SwapCapExceeded { cap: usize },

    #[error("degenerate selection: rank of S^T W is {rank}, need {expected}")]
    DegenerateSelection { rank: usize, expected: usize },

    #[error("degenerate basis at greedy step {step}")]
    DegenerateBasis { step: usize },

    #[error(
        "adaptive range finder stopped after {blocks} blocks with relative residual {achieved:.3e} > {target:.3e}"
    )]
    AdaptiveNotConverged {
        blocks: usize,
        achieved: f64,
        target: f64,
        partial: Box<DenseMatrix>,
    },

    #[error("sketch column {column}: {reason}")]
    Sketch { column: usize, reason: &'static str },

    #[error("spectral gap is not positive ({gap:.3e})")]
    NoGap { gap: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
