use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular evaluation point: {0}")]
    Singular(String),

    #[error("basis too large: {size} states exceeds cap {cap}")]
    BasisTooLarge { size: usize, cap: usize },

    #[error("truncation insufficient: tail estimate {tail:e} exceeds tolerance {tol:e}")]
    TruncationInsufficient { tail: f64, tol: f64 },

    #[error("state outside basis: {0}")]
    OutsideBasis(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("extrapolation did not converge: successive estimates differ by {0:e}")]
    Extrapolation(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
