use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("Pauli strings have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("unsupported dimension: {0}")]
    UnsupportedDim(String),

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("regrouped coefficient for {label} has imaginary part {imag:e}")]
    ComplexCoefficient { label: String, imag: f64 },

    #[error("decomposition has zero sampling cost")]
    ZeroMap,

    #[error("expected {expected} parameters, got {got}")]
    ParamCountMismatch { expected: usize, got: usize },

    #[error("loss evaluated to a non-finite value ({0})")]
    NonFiniteLoss(f64),

    #[error("minimal eigenvalue changes sign more than once over the scan grid")]
    NonMonotone,

    #[error("invalid Pauli label {0:?}")]
    InvalidLabel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
