use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("plane is not representable in the graph chart (leading minor determinant {det:e})")]
    SingularChart { det: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("Gram determinant is negative ({0:e})")]
    NegativeGram(f64),
    #[error("bad wedge indices: {0}")]
    BadIndices(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("graph is not critical: residual {residual:e} exceeds {tolerance:e}")]
    NotCritical { residual: f64, tolerance: f64 },
    #[error("deformed boundary leaves the graph chart")]
    ChartExit,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Stable machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::SingularChart { .. } => "SingularChart",
            Error::NonFinite(_) => "NonFinite",
            Error::Domain(_) => "DomainError",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::NegativeGram(_) => "NegativeGram",
            Error::BadIndices(_) => "BadIndices",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SingularJacobian => "SingularJacobian",
            Error::NotCritical { .. } => "NotCritical",
            Error::ChartExit => "ChartExit",
            Error::Parse(_) => "ParseError",
            Error::Invalid(_) => "InvalidInput",
        }
    }

    /// Whether the error stems from malformed input rather than from a computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_) | Error::BadIndices(_) | Error::Parse(_) | Error::Invalid(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
