//! Numerical laboratory for sup-norm bounds of semiclassical quasimodes in two
//! dimensions.
//!
//! The modules follow the workflow: sample functions on periodic grids
//! ([`field`]), build `P = −h²Δ_g + V` ([`operator`]), find eigenpairs near an
//! energy and form clusters ([`spectral`]), construct the log-loss example for
//! the indefinite form ([`counterexample`]), run the normalization and
//! rescaling reductions ([`rescale`]) and fit scaling laws ([`sweep`]).
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix `f64`.

pub mod counterexample;
pub mod field;
pub mod operator;
pub mod rescale;
pub mod scalar;
pub mod spectral;
pub mod sweep;

pub use scalar::Real;

pub type Grid1D = field::Grid1D<f64>;
pub type Grid2D = field::Grid2D<f64>;
pub type GridFunction = field::GridFunction<f64>;
pub type MetricField = field::MetricField<f64>;
pub type PotentialField = field::PotentialField<f64>;
pub type BumpProfile = field::BumpProfile<f64>;
