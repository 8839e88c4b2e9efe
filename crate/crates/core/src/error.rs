use thiserror::Error;

/// Errors raised by the spectral, perturbation, generator and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("eigenvector basis is not orthonormal (max deviation {0:.3e})")]
    InvalidBasis(f64),
    #[error("eigenvalue at index {0} is not simple")]
    NotSimple(usize),
    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },
    #[error("spectrum has no gap: relative rank undefined")]
    NoGap,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimError { expected: usize, got: usize },
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("empirical eigenvector is orthogonal to the population eigenvector {0}; sign undefined")]
    DegenerateSign(usize),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("coefficient family needs more than four moments (df = {0})")]
    MomentError(f64),
    #[error("weak-dependence decay exponent must exceed 3/2 (got {0})")]
    DecayError(f64),
    #[error("circulant embedding has a negative eigenvalue ({0:.3e})")]
    EmbeddingError(f64),
    #[error("model error: {0}")]
    ModelError(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("long-memory experiment requires sigma > 0")]
    NotLongMemory,
    #[error("block {block} has multiplicity {multiplicity}; at least 4 required")]
    TooSmallBlock { block: usize, multiplicity: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
