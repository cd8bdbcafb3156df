use thiserror::Error;

/// Errors produced by the tabular engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violated a documented precondition (dimension mismatch, bad index, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative or direct solver could not reach the requested accuracy.
    #[error("numerical failure in {context}: residual {residual:e}")]
    NumericalFailure {
        context: &'static str,
        residual: f64,
    },

    /// A distribution that must be strictly positive has a zero entry.
    #[error("degenerate distribution: zero mass at state {state}")]
    DegenerateDistribution { state: usize },

    /// Maze layout could not be parsed.
    #[error("layout error at row {row}, column {column}: {message}")]
    Layout {
        row: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
