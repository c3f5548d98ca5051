use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("graph size {n} exceeds the limit of {limit} for {operation}")]
    UnsupportedSize {
        operation: &'static str,
        n: usize,
        limit: usize,
    },
    #[error("sampling diverged: {0}")]
    SamplingDiverged(String),
    #[error("type index {value} out of range for {num_types} types")]
    TypeOutOfRange { value: u8, num_types: usize },
    #[error("invalid encoding: {0}")]
    InvalidEncoding(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("histogram kind mismatch: {0:?} vs {1:?}")]
    KindMismatch(crate::eval::StatKind, crate::eval::StatKind),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
