use std::path::PathBuf;

/// Errors produced by grid construction, model I/O, assembly and the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: expected {expected:?}, got {found:?}")]
    GridMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{dim}: {extent} intervals not divisible by {factor}")]
    Divisibility {
        dim: &'static str,
        extent: usize,
        factor: usize,
    },

    #[error("size mismatch in {path}: expected {expected} bytes, found {found}")]
    SizeMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("non-positive velocity {value} at node {index}")]
    NonPositiveVelocity { index: usize, value: f64 },

    #[error("malformed metadata: {0}")]
    Metadata(String),

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("fast marching stalled with {remaining} nodes unreached")]
    HeapExhausted { remaining: usize },

    #[error("multigrid hierarchy needs at least two levels, grid {n1}x{n2} cannot be coarsened")]
    TooFewLevels { n1: usize, n2: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
