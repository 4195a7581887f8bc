use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, RiffleError>;

#[derive(Debug, Error)]
pub enum RiffleError {
    #[error("invalid arrangement: {0}")]
    InvalidArrangement(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid pack distribution: {0}")]
    InvalidDistribution(String),

    /// The pack distribution is a point mass at 1, so the chain never moves.
    #[error("no mixing: the pack distribution is concentrated at 1")]
    NoMixing,

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("size guard exceeded for {what}: {requested} > {limit}")]
    SizeGuard {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("law invariant violated: {0}")]
    InvariantViolation(String),

    #[error("cache file {path}: {reason}")]
    CorruptCache { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RiffleError {
    pub fn is_size_guard(&self) -> bool {
        matches!(self, RiffleError::SizeGuard { .. })
    }
}
