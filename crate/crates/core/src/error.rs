use thiserror::Error;

/// Errors produced by the estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the dense-table cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("dimension must be at least {min}, got {dim}")]
    DimensionTooSmall { dim: usize, min: usize },

    #[error("variable index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("variables {0} and {1} must be distinct")]
    SameIndex(usize, usize),

    #[error("empty sample: no observations")]
    EmptySample,

    #[error("{what}: zero probability where a strictly positive value is required")]
    ZeroProbability { what: &'static str },

    #[error("table lacks full support ({zeros} zero states)")]
    NotFullSupport { zeros: usize },

    #[error("inconsistent moments: {0}")]
    InconsistentMoments(String),

    #[error("mean of variable {var} is {mean}, must lie strictly inside (-1, 1)")]
    DegenerateMean { var: usize, mean: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("MLE does not exist: {0}")]
    MleDoesNotExist(String),

    #[error("clamped update precondition violated on edge ({i}, {j}): delta + J = {gap}")]
    ClampPrecondition { i: usize, j: usize, gap: f64 },

    #[error("root {root} outside the admissible interval (0, {upper})")]
    RootOutOfRange { root: f64, upper: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
