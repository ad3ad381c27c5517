use thiserror::Error;

/// Errors produced by the factorization, sampling and data layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("matrix has no real principal square root: {0}")]
    NoRealSquareRoot(String),

    #[error("sample block has a zero eigenvalue (|lambda| = {magnitude:e} <= tol {tol:e})")]
    ZeroEigenvalue { magnitude: f64, tol: f64 },

    #[error("spectrum contains complex-conjugate eigenvalue pairs")]
    ComplexSpectrum,

    #[error("eigenbasis is numerically defective (condition {condition:e})")]
    DefectiveEigenbasis { condition: f64 },

    #[error("negative eigenvalue {value:e} has no real square root")]
    NegativeEigenvalue { value: f64 },

    #[error("sample block is singular: sigma_s = {sigma_s:e} <= tol {tol:e}")]
    SingularSample { sigma_s: f64, tol: f64 },

    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("matrix is not positive semi-definite: {0}")]
    PsdViolation(String),

    #[error("degenerate sampling: {0}")]
    DegenerateSampling(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("bound not applicable: {0}")]
    BoundNotApplicable(String),

    #[error("all {} trials failed: {}", .0.len(), .0.join("; "))]
    AllTrialsFailed(Vec<String>),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
