use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid factor index {index} for a system with {n_factors} factors")]
    InvalidFactor { index: usize, n_factors: usize },

    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    #[error("matrix is not Hermitian (max |M - M^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("eigenvalue {value:e} is below the clipping floor of -1e-9")]
    NegativeEigenvalue { value: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("time step {dt:e} s is too large: rate * dt = {product:e} exceeds {limit}")]
    StepTooLarge { dt: f64, product: f64, limit: f64 },

    #[error("composite system of total dimension {dim} exceeds the cap of {cap}")]
    CompositeTooLarge { dim: usize, cap: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("unsupported link configuration: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
