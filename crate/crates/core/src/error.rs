use thiserror::Error;

#[derive(Debug, Error)]
pub enum IodError {
    #[error("not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry count {len} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigenvalue solver did not converge on a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("partition mismatch: sizes sum to {sum}, dimension is {dim}")]
    PartitionMismatch { sum: usize, dim: usize },

    #[error("partition part {0} is empty")]
    EmptyPart(usize),

    #[error("not pairwise equivalent: ranks {ranks:?}")]
    NotPairwiseEquivalent { ranks: Vec<usize> },

    #[error("operands belong to different projection families")]
    FamilyMismatch,

    #[error("index {index} out of range for a family of {len} members")]
    InvalidIndex { index: usize, len: usize },

    #[error("index {0} appears twice in the corner selection")]
    DuplicateIndex(usize),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("truncation schedule must be strictly increasing and start at n >= 1")]
    InvalidSchedule,

    #[error("net not converged after {iterations} terms, last increment {last_increment:e}")]
    NetNotConverged { iterations: usize, last_increment: f64 },

    #[error("invalid monotone net: {0}")]
    InvalidNet(String),

    #[error("invalid projection family: {0}")]
    InvalidFamily(String),

    #[error("unresolved family reference `{0}`")]
    UnresolvedFamily(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, IodError>;
