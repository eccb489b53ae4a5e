use std::sync::Arc;

use super::smooth::{AffineField, Polynomial2, SharedField, SmoothField};
use crate::scalar::Real;

/// Real potential `V(x)` with its derivatives.
#[derive(Clone, Debug)]
pub struct PotentialField<T: Real> {
    field: SharedField<T>,
}

impl<T: Real> PotentialField<T> {
    pub fn new(field: SharedField<T>) -> Self {
        Self { field }
    }

    pub fn from_field(field: impl SmoothField<T> + 'static) -> Self {
        Self::new(Arc::new(field))
    }

    pub fn constant(c: T) -> Self {
        Self::from_field(Polynomial2::constant(c))
    }

    pub fn field(&self) -> &SharedField<T> {
        &self.field
    }

    pub fn v(&self, x: [T; 2]) -> T {
        self.field.value(x)
    }

    pub fn grad_v(&self, x: [T; 2]) -> [T; 2] {
        self.field.gradient(x)
    }

    pub fn hess_v(&self, x: [T; 2]) -> [[T; 2]; 2] {
        self.field.hessian(x)
    }

    pub fn partial(&self, alpha: [usize; 2], x: [T; 2]) -> Option<T> {
        self.field.partial(alpha, x)
    }

    pub fn is_constant(&self) -> bool {
        self.field.is_constant()
    }

    /// `x ↦ scale · V(Mx + shift) + offset`.
    pub fn transformed(&self, scale: T, map: [[T; 2]; 2], shift: [T; 2], offset: T) -> Self {
        Self::from_field(AffineField::new(self.field.clone(), scale, map, shift, offset))
    }

    /// `x ↦ scale · V(c x)`.
    pub fn scaled(&self, scale: T, c: T) -> Self {
        self.transformed(scale, [[c, T::zero()], [T::zero(), c]], [T::zero(); 2], T::zero())
    }

    /// Largest gap between the analytic gradient/Hessian and central
    /// differences of `v` (resp. `grad_v`) with the given step. `O(step²)`.
    pub fn consistency_error(&self, x: [T; 2], step: T) -> T {
        let two = T::lit(2.0);
        let mut err = T::zero();
        let g = self.grad_v(x);
        let hess = self.hess_v(x);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += step;
            xm[i] -= step;
            let fd = (self.v(xp) - self.v(xm)) / (two * step);
            err = err.max((fd - g[i]).abs());
            let (gp, gm) = (self.grad_v(xp), self.grad_v(xm));
            for j in 0..2 {
                err = err.max(((gp[j] - gm[j]) / (two * step) - hess[i][j]).abs());
            }
        }
        err
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::smooth::ClosureField;

    #[test]
    fn scaled_potential_chain_rule() {
        // V = x₁² + 3x₂, V'(x) = c V(cx)
        let v = PotentialField::from_field(Polynomial2::from_terms(&[(2, 0, 1.0), (0, 1, 3.0)]));
        let c = 0.25f64;
        let w = v.scaled(c, c);
        let x = [0.7, -0.3];
        let g = v.grad_v([c * x[0], c * x[1]]);
        let gw = w.grad_v(x);
        assert!((gw[0] - c * c * g[0]).abs() < 1e-15 && (gw[1] - c * c * g[1]).abs() < 1e-15);
        assert!((w.v(x) - c * v.v([c * x[0], c * x[1]])).abs() < 1e-15);
    }

    #[test]
    fn consistency_is_second_order() {
        let v = PotentialField::from_field(ClosureField::new(
            |x: [f64; 2]| x[0].sin() * x[1].cos(),
            |x| [x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()],
            |x| {
                let xy = -x[0].cos() * x[1].sin();
                [[-x[0].sin() * x[1].cos(), xy], [xy, -x[0].sin() * x[1].cos()]]
            },
        ));
        let x = [0.4, 0.9];
        let e1 = v.consistency_error(x, 1e-2);
        let e2 = v.consistency_error(x, 5e-3);
        assert!(e1 < 1e-4);
        assert!((e1 / e2 - 4.0).abs() < 0.1);
    }
}
