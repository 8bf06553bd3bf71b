use thiserror::Error;

/// Errors surfaced by configuration checks, scenario generation, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid user position: {0}")]
    InvalidUser(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("allocation rows must lie on the probability simplex: {0}")]
    NonSimplex(String),

    #[error("sampling grid cannot supply {requested} {field} users (only {available} grid ranges qualify)")]
    GridExhausted {
        field: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("user {user} has no subband with positive channel-to-noise ratio; logarithmic utility is unbounded below")]
    StarvedUser { user: usize },

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("zero channel vector for subband {subband}, user {user}")]
    ZeroChannel { subband: usize, user: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
