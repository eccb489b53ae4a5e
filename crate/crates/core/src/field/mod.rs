//! Grids, sampled functions, coefficient fields and the bump profiles.

mod bump;
mod function;
mod grid;
mod metric;
mod potential;
pub mod smooth;

pub use bump::BumpProfile;
pub use function::{inner_product, l2_norm, l2_norm_on_disk, sup_norm, sup_norm_refined, weighted_norm, GridFunction};
pub use grid::{Grid1D, Grid2D};
pub use metric::MetricField;
pub use potential::PotentialField;
pub use smooth::{Polynomial2, SharedField, SmoothField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("functions live on different grids")]
    GridMismatch,
    #[error("metric not positive definite at {x:?} (smallest eigenvalue {eigenvalue})")]
    NotPositiveDefinite { x: [f64; 2], eigenvalue: f64 },
}
