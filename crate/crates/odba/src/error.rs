use thiserror::Error;

pub type Result<T> = std::result::Result<T, OdbaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdbaError {
    #[error("factor index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("factor {0} listed twice")]
    RepeatedFactor(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),

    #[error("identity `{id}` needs {needed} spectral points, got {given}")]
    NotEnoughPoints { id: String, needed: usize, given: usize },

    #[error("operation requires the homogeneous chain (all inhomogeneities zero)")]
    HomogeneousRequired,

    #[error("evaluation at a pole: {0}")]
    Pole(String),

    #[error("eigenbasis of the transfer matrix is ill-conditioned after {attempts} reference points")]
    IllConditionedEigenbasis { attempts: usize },

    #[error("invalid Bethe root set: {0}")]
    InvalidRoots(String),

    #[error("no converged solutions from {seeds} seeds")]
    NoConvergedSolutions { seeds: usize },

    #[error("linear solve failed: {0}")]
    Singular(String),
}
