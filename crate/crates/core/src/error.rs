use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {x} outside domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value while computing {context}")]
    Numeric { context: String },

    #[error("{what} = {value} exceeds cap {cap}")]
    Capacity {
        what: &'static str,
        value: u64,
        cap: u64,
    },

    #[error("series does not converge: {context}")]
    Divergence { context: String },

    #[error("no radius bracket exists: {reason}")]
    BracketFailure { reason: String },

    #[error("malformed word shape: {0}")]
    WordShape(String),
}

pub type Result<T> = std::result::Result<T, Error>;
