use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} exceeds tolerance)")]
    NonHermitianInput { asymmetry: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tuple mismatch: {0}")]
    TupleMismatch(String),
    #[error("malformed feasibility problem: {0}")]
    BadProblem(String),
    #[error("verdict carries no infeasibility certificate")]
    NoCertificate,
    #[error("tuple is not a point of the maximal matrix convex set (margin {margin:.3e})")]
    NotInKmax { margin: f64 },
    #[error("convex body does not contain the origin in its interior")]
    NoInteriorZero,
    #[error("tuple does not consist of commuting normal matrices (defect {defect:.3e})")]
    NotCommuting { defect: f64 },
    #[error("candidate {index} is reducible (commutant dimension {commutant_dim})")]
    ReducibleCandidate { index: usize, commutant_dim: usize },
    #[error("essential spectrum is empty")]
    EmptyEssentialSpectrum,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
