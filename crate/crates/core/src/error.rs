use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("target point lies outside the convex hull")]
    OutsideHull,

    #[error("{what}: enumeration of {count} items exceeds cap {cap}")]
    CapExceeded { what: &'static str, count: u128, cap: u128 },

    #[error("numeric breakdown in simplex: {0}")]
    NumericBreakdown(String),

    #[error("inconsistent certificate: {0}")]
    Inconsistent(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn check_cap(what: &'static str, count: u128, cap: usize) -> Result<()> {
    if count > cap as u128 {
        Err(Error::CapExceeded { what, count, cap: cap as u128 })
    } else {
        Ok(())
    }
}
