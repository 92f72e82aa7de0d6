use thiserror::Error;

pub type Result<T> = std::result::Result<T, CkvError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CkvError {
    #[error("point {point:?} lies outside the patch box")]
    OutOfPatch { point: Vec<f64> },

    #[error("metric is singular at {point:?} (condition estimate {condition:e})")]
    SingularMetric { point: Vec<f64>, condition: f64 },

    #[error(
        "metric is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})"
    )]
    NotPositiveDefinite {
        point: Vec<f64>,
        min_eigenvalue: f64,
    },

    #[error("operator has {rows} rows but {cols} columns; refine the grid or lower the degree")]
    RowDeficient { rows: usize, cols: usize },

    #[error("basis is rank deficient on the collocation grid")]
    DegenerateBasis,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

impl CkvError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        CkvError::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CkvError::SingularMetric { .. }
                | CkvError::NotPositiveDefinite { .. }
                | CkvError::DegenerateBasis
        )
    }
}
