use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),
    #[error("point {point} is outside the interior of the kernel domain")]
    Domain { point: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("groups overlap at coordinate {index}")]
    OverlappingGroups { index: usize },
    #[error("group coordinate {index} is out of range for dimension {dim}")]
    GroupIndex { index: usize, dim: usize },
    #[error("metric entry {index} must be positive and finite, got {value}")]
    Metric { index: usize, value: f64 },
    #[error("invalid data: {0}")]
    Data(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("matrix is not positive definite, even after diagonal regularization")]
    NotPositiveDefinite,
    #[error("matrix is singular")]
    Singular,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("iterates diverged at iteration {k}")]
    Diverged { k: usize },
}
