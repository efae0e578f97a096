use thiserror::Error;

use crate::embedding::ViewLabel;

/// Unified error type for the library surface.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two vectors that must share a dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    /// A direction required for projection has (near-)zero norm.
    #[error("cannot project onto a direction with norm {norm:e}")]
    ZeroDirection { norm: f64 },
    /// An embedding or feature vector was constructed with no entries.
    #[error("vector must have at least one entry")]
    EmptyVector,
    /// A value required to be finite is NaN or infinite.
    #[error("non-finite value {0}")]
    NonFinite(f64),
    /// A view residual needed by the injection schedule is absent.
    #[error("no {0:?} residual in the residual set")]
    MissingResidual(ViewLabel),
    /// An azimuth lies outside the canonical (-180, 180] range.
    #[error("azimuth {0} outside (-180, 180]")]
    AzimuthOutOfRange(f64),
    /// An ordering was requested over an empty view list.
    #[error("view list is empty")]
    EmptyViews,
    /// Cosine similarity against a (near-)zero-norm vector is undefined.
    #[error("cosine similarity undefined for a near-zero-norm vector")]
    ZeroNorm,
    /// Fewer than two ranked views: no adjacent pairs to compare.
    #[error("partial-order loss needs at least 2 ranked views, got {0}")]
    TooFewViews(usize),
    /// A probability ratio's denominator vanished.
    #[error("degenerate view distribution: denominator {0:e}")]
    DegenerateDistribution(f64),
    /// A run configuration violates a documented constraint.
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
}
