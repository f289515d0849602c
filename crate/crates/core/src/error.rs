//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    InvalidArgument(String),
    /// A vector or matrix has the wrong length for the operation.
    DimensionMismatch { expected: usize, actual: usize },
    /// An iterative solver stopped before meeting its tolerance.
    NonConvergence { residual: f64, iterations: usize },
    /// A numerical routine (eigensolver, pseudoinverse) failed.
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch { expected, actual } => {
                write!(f, "dimension mismatch: expected {expected}, got {actual}")
            }
            Error::NonConvergence { residual, iterations } => write!(
                f,
                "solver did not converge within {iterations} iterations (residual {residual:e})"
            ),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
