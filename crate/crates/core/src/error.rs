use thiserror::Error;

pub type Result<T> = std::result::Result<T, OedError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OedError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("index ({i}, {j}) out of range for dimension {p}")]
    IndexOutOfRange { i: usize, j: usize, p: usize },
    #[error("dimension mismatch: expected {expected}, got {found} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("FIM is singular (smallest eigenvalue {lambda_min:e} <= tolerance {tol:e})")]
    SingularFim { lambda_min: f64, tol: f64 },
    #[error("determinant is not positive (sign {sign})")]
    NonPositiveDeterminant { sign: i8 },
    #[error("repeated extreme eigenvalue (separation {separation:e} <= {tol:e})")]
    RepeatedExtremeEigenvalue { separation: f64, tol: f64 },
    #[error("2x2 covariance submatrix is not positive definite")]
    NonPositiveSubmatrix,
    #[error("simulation failed: {0}")]
    SimulationFailure(String),
    #[error("RecycleNotConverged after {iterations} iterations (residual {residual:e})")]
    RecycleNotConverged { iterations: usize, residual: f64 },
    #[error("NegativeState: {what} = {value:e}")]
    NegativeState { what: String, value: f64 },
    #[error("estimation did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("all {starts} design starts failed")]
    AllStartsFailed { starts: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl OedError {
    /// True for errors caused by bad caller input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            OedError::IndexOutOfRange { .. }
                | OedError::DimensionMismatch { .. }
                | OedError::InvalidInput(_)
        )
    }
}
