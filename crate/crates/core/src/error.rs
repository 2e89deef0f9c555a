use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {dim} exceeds the cap of 2^{max_qubits}")]
    DimensionCap { dim: usize, max_qubits: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid GHZ weights: {0}")]
    InvalidWeights(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("settings are not planar")]
    NonPlanar,

    #[error("operator carries no spectral data")]
    MissingSpectralData,

    #[error("operator carries no last-qubit split")]
    MissingSplit,

    #[error("not a normalized WWZB operator: sum of b_k^2 = {sum} exceeds {limit}")]
    ConstraintViolated { sum: f64, limit: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("endpoints do not bracket the threshold: {0}")]
    NonBracketing(String),

    /// A tested invariant failed. The caller is expected to dump a certificate.
    #[error("invariant `{invariant}` falsified: {detail}")]
    Falsified { invariant: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
