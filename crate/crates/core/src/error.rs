use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("degenerate ground state: gap {gap:e} below threshold {threshold:e}")]
    DegenerateGroundState { gap: f64, threshold: f64 },

    #[error("numerical inconsistency: {0}")]
    NumericalConsistency(String),

    #[error("step size too coarse: F(1) changed by {change:e} on halving (tolerance {tolerance:e})")]
    StepSizeTooCoarse { change: f64, tolerance: f64 },

    #[error("bound is vacuously unbounded: driving uncertainty is zero but 1 - epsilon - C(1) = {numerator} > 0")]
    VacuouslyUnbounded { numerator: f64 },

    #[error("no bracket found: criterion still fails at t_f = {t_hi}")]
    BracketNotFound { t_hi: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("dimension {dim} too large for dense construction (limit {limit}); use build_reduced")]
    TooLargeForDense { dim: usize, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateGroundState { .. }
                | Error::NumericalConsistency(_)
                | Error::StepSizeTooCoarse { .. }
                | Error::VacuouslyUnbounded { .. }
                | Error::BracketNotFound { .. }
        )
    }
}
