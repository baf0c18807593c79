//! Error type shared across the crate.

/// Errors produced by channel I/O, precoding, and the simulation engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed channel file; the message names the offending field.
    #[error("parse error in channel file: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// MDL profile that cannot be realized, e.g. positive MDL on one mode.
    #[error("infeasible MDL profile: {0}")]
    InfeasibleProfile(String),

    /// Threshold allocation with no mode above the threshold.
    #[error("infeasible threshold: {0}")]
    InfeasibleThreshold(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Strictly positive and finite (rejects NaN and infinities).
pub(crate) fn positive_finite(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

/// Non-negative and finite (rejects NaN and infinities).
pub(crate) fn nonneg_finite(x: f64) -> bool {
    x >= 0.0 && x.is_finite()
}
