//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by mesh construction, solvers and the CLI front end.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A query outside the admissible range (time, history, ...).
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// An internal usage contract was broken (slab ordering, case misuse, ...).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Newton failed to reach the residual tolerance.
    #[error("slab {slab}: Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        slab: usize,
        iterations: usize,
        residual: f64,
    },

    /// LU factorization hit a pivot below the singularity threshold.
    #[error("slab {slab}: singular slab system (pivot {pivot:.3e})")]
    SingularSystem { slab: usize, pivot: f64 },

    /// Config file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn out_of_range(msg: impl Into<String>) -> Self {
        Error::OutOfRange(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
