use thiserror::Error;

/// Failures of the numerical methods (barycenter, SAPV, weighted cosine).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComputeError {
    #[error("inputs are defined over different category catalogs")]
    CatalogMismatch,
    #[error("total publication count is zero")]
    ZeroTotal,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("weight {value} at position {index} is not positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("quadratic form xᵗSx = {0} is not positive (non-PSD matrix or zero vector)")]
    DegenerateNorm(f64),
    #[error("matrix contains a non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}
