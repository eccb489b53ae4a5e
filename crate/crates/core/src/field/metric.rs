use std::sync::Arc;

use super::smooth::{AffineField, LinearCombination, Polynomial2, SharedField};
use super::{FieldError, Grid2D};
use crate::scalar::Real;

/// Inverse metric coefficients `g^{ij}(x)` (symmetric, so three entries).
#[derive(Clone, Debug)]
pub struct MetricField<T: Real> {
    g11: SharedField<T>,
    g12: SharedField<T>,
    g22: SharedField<T>,
}

impl<T: Real> MetricField<T> {
    pub fn new(g11: SharedField<T>, g12: SharedField<T>, g22: SharedField<T>) -> Self {
        Self { g11, g12, g22 }
    }

    pub fn identity() -> Self {
        Self::constant([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    pub fn constant(g: [[T; 2]; 2]) -> Self {
        let c = |v: T| -> SharedField<T> { Arc::new(Polynomial2::constant(v)) };
        Self::new(c(g[0][0]), c(g[0][1]), c(g[1][1]))
    }

    /// Entry `g^{ij}`, `i, j ∈ {0, 1}`.
    pub fn entry(&self, i: usize, j: usize) -> &SharedField<T> {
        match (i, j) {
            (0, 0) => &self.g11,
            (1, 1) => &self.g22,
            _ => &self.g12,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.g11.is_constant() && self.g12.is_constant() && self.g22.is_constant()
    }

    pub fn inverse_metric(&self, x: [T; 2]) -> [[T; 2]; 2] {
        let off = self.g12.value(x);
        [[self.g11.value(x), off], [off, self.g22.value(x)]]
    }

    /// `√ḡ` with `ḡ = 1 / det(g^{ij})`.
    pub fn sqrt_det(&self, x: [T; 2]) -> T {
        let g = self.inverse_metric(x);
        (g[0][0] * g[1][1] - g[0][1] * g[0][1]).sqrt().recip()
    }

    /// Flux coefficients `g^{ij} √ḡ`.
    pub fn flux(&self, x: [T; 2]) -> [[T; 2]; 2] {
        let g = self.inverse_metric(x);
        let s = self.sqrt_det(x);
        [[g[0][0] * s, g[0][1] * s], [g[1][0] * s, g[1][1] * s]]
    }

    /// Smaller eigenvalue of `g^{ij}(x)`.
    pub fn min_eigenvalue(&self, x: [T; 2]) -> T {
        let g = self.inverse_metric(x);
        let half = T::lit(0.5);
        let mean = half * (g[0][0] + g[1][1]);
        let dev = (half * (g[0][0] - g[1][1])).hypot(g[0][1]);
        mean - dev
    }

    pub fn check_positive_definite(&self, grid: &Grid2D<T>) -> Result<(), FieldError> {
        for k in 0..grid.len() {
            let x = grid.point_of(k);
            let lam = self.min_eigenvalue(x);
            if !(lam > T::zero()) {
                return Err(FieldError::NotPositiveDefinite { x: [x[0].as_f64(), x[1].as_f64()], eigenvalue: lam.as_f64() });
            }
        }
        Ok(())
    }

    /// `x ↦ g(Mx + b)`, entries unchanged.
    pub fn pulled_back(&self, map: [[T; 2]; 2], shift: [T; 2]) -> Self {
        let pull = |f: &SharedField<T>| -> SharedField<T> { Arc::new(AffineField::new(f.clone(), T::one(), map, shift, T::zero())) };
        Self::new(pull(&self.g11), pull(&self.g12), pull(&self.g22))
    }

    /// Metric in rotated coordinates `y = Rᵀx`: `g'(y) = Rᵀ g(Ry) R`.
    pub fn rotated(&self, r: [[T; 2]; 2]) -> Self {
        let pulled = self.pulled_back(r, [T::zero(), T::zero()]);
        let f = [[pulled.g11.clone(), pulled.g12.clone()], [pulled.g12.clone(), pulled.g22.clone()]];
        let entry = |a: usize, b: usize| -> SharedField<T> {
            let mut terms = Vec::new();
            for k in 0..2 {
                for l in 0..2 {
                    terms.push((r[k][a] * r[l][b], f[k][l].clone()));
                }
            }
            Arc::new(LinearCombination::new(terms))
        };
        Self::new(entry(0, 0), entry(0, 1), entry(1, 1))
    }
}
