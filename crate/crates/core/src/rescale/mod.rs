//! Normalization of `(g, V)` near a point, the rescaling maps that reduce
//! every local configuration to a model problem, and the four-way case split
//! that decides which map applies where.
//!
//! The maps act on sampled functions. Each returns a [`Rescaled`] that
//! records the coordinate change `y = s·R·x + x₀` and the factor relating the
//! new residual on `|x| < 2` to the old one on `|y − x₀| < 2s`, which
//! [`residual_identity`] checks numerically.

mod classify;
mod maps;
mod normalization;

use thiserror::Error;

pub use classify::{
    case_conditions, classify_case, cover_ball, BallCover, BuiltinPotential, CaseDecision, CASE1_GRADIENT, CASE3_GRADIENT,
    CASE3_RADIUS, CASE4_RADIUS, CASE4_ZERO_DISTANCE, MAX_RADIUS,
};
pub use maps::{
    case2_rescale, lemma3_rescale, lemma4_rescale, residual_identity, ResampleRecord, Resampling, Rescaled, ResidualIdentity,
};
pub use normalization::{
    cond2_values, rescale_to_normalization, verify_normalization, NormalizationReport, NormalizedFields, COND1_TOLERANCE,
    COND2_FIRST_BOUND, COND2_SECOND_BOUND, MAX_DERIVATIVE_ORDER, SAMPLE_SPACING,
};

use crate::field::FieldError;
use crate::operator::OperatorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RescaleError {
    #[error("h = {0} outside the admissible range")]
    InvalidH(f64),
    #[error("scale {0} must lie in (0, 1]")]
    InvalidScale(f64),
    #[error("c = {c} is below h = {h}")]
    CBelowH { c: f64, h: f64 },
    #[error("|dV(0)| = {beta} outside [8h^(1/2), 1/2] = [{lo}, {hi}]")]
    BetaOutOfRange { beta: f64, lo: f64, hi: f64 },
    #[error("point {0:?} lies outside the unit ball")]
    OutsideBall([f64; 2]),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("sample point {0:?} lies outside the source grid")]
    OutsideSource([f64; 2]),
    #[error("no zero of V within {bound} of {x0:?}")]
    ZeroNotFound { x0: [f64; 2], bound: f64 },
    #[error("cover still has gaps at depth {0}")]
    CoverageGap(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
