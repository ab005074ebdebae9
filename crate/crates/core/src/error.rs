use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("endomorphism is not self-adjoint (residual {residual:e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("endomorphism is not a generic nilpotent")]
    NotGenericNilpotent,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("t = {t} lies outside the interval ({lo}, {hi})")]
    OutsideInterval { t: f64, lo: f64, hi: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },

    #[error("solutions are based at different points ({0} vs {1})")]
    BaseMismatch(f64, f64),

    #[error("vector does not lie in the declared subspace (residual {residual:e})")]
    NotInSubspace { residual: f64 },

    #[error("spectrum mismatch: max error {max_err:e} exceeds {tol:e}")]
    SpectrumMismatch { max_err: f64, tol: f64 },

    #[error("eigenvalue computation failed")]
    EigenFailure,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),
}

impl LabError {
    /// Errors caused by invalid inputs rather than by a numerical failure.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            LabError::DimensionMismatch { .. }
                | LabError::NotSelfAdjoint { .. }
                | LabError::NotGenericNilpotent
                | LabError::InvalidParameter(_)
                | LabError::OutsideInterval { .. }
                | LabError::BaseMismatch(..)
                | LabError::NotInSubspace { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
