use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite: non-positive pivot at index {pivot}")]
    NotPositiveDefinite { pivot: usize },

    #[error("singular matrix: zero pivot at index {pivot}")]
    Singular { pivot: usize },

    #[error("degenerate interpolation diagonal at point {point} (d_i = {value:e})")]
    DegenerateDiagonal { point: usize, value: f64 },

    #[error("F point {point} has no interpolatory coarse points")]
    EmptyInterpolation { point: usize },

    #[error("level {level} out of range (hierarchy has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("problem of dimension {dim} exceeds the dense limit {limit}; use a smaller mesh")]
    TooLarge { dim: usize, limit: usize },

    #[error("augmented eigenproblem is ill-conditioned: {0}")]
    Conditioning(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
