use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("distributions over different alphabets ({0} vs {1} outcomes)")]
    AlphabetMismatch(usize, usize),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("index {index} out of range for ensemble of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate magnitudes for state {0}: a and b must both be nonzero")]
    DegenerateMagnitudes(usize),

    #[error("t = {0} outside [-0.5, 1.0]")]
    TOutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
