use std::fmt;
use std::sync::Arc;

use crate::field::{sup_norm, GridFunction};
use crate::scalar::{fft2_forward, fft2_inverse, smooth_step, Real};

type Symbol<T> = dyn Fn([T; 2]) -> T + Send + Sync;

/// `m(hD)`: multiplication by `m(hξ)` in the DFT basis.
#[derive(Clone)]
pub struct FourierMultiplier<T> {
    h: T,
    symbol: Arc<Symbol<T>>,
}

impl<T: fmt::Debug> fmt::Debug for FourierMultiplier<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierMultiplier").field("h", &self.h).finish_non_exhaustive()
    }
}

impl<T: Real> FourierMultiplier<T> {
    /// `symbol` is evaluated at the scaled frequency `ζ = hξ`.
    pub fn new(h: T, symbol: impl Fn([T; 2]) -> T + Send + Sync + 'static) -> Self {
        Self { h, symbol: Arc::new(symbol) }
    }

    pub fn identity(h: T) -> Self {
        Self::new(h, |_| T::one())
    }

    /// `h²ξ₁ξ₂`, the symbol of `−h²∂₁∂₂`.
    pub fn hyperbolic(h: T) -> Self {
        Self::new(h, |z| z[0] * z[1])
    }

    /// `h²|ξ|²`, the symbol of `−h²Δ`.
    pub fn laplacian(h: T) -> Self {
        Self::new(h, |z| z[0] * z[0] + z[1] * z[1])
    }

    pub fn cutoff(h: T, chi: RadialCutoff<T>) -> Self {
        Self::new(h, move |z| chi.eval(z[0].hypot(z[1])))
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn symbol_at(&self, xi: [T; 2]) -> T {
        (self.symbol)([self.h * xi[0], self.h * xi[1]])
    }

    /// Product symbol: applying the result equals applying `other` then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (self.symbol.clone(), other.symbol.clone());
        let ratio = other.h / self.h;
        Self::new(self.h, move |z| a(z) * b([z[0] * ratio, z[1] * ratio]))
    }
}

/// DFT, multiply by `m(hξ)`, inverse DFT.
pub fn fourier_multiplier<T: Real>(m: &FourierMultiplier<T>, u: &GridFunction<T>) -> GridFunction<T> {
    let grid = *u.grid();
    let n = grid.points_per_dim();
    let mut buf = u.values().to_vec();
    fft2_forward(&mut buf, n);
    let scale = T::from_usize_exact(n * n).recip();
    for m1 in 0..n {
        for m2 in 0..n {
            let s = m.symbol_at(grid.frequency(m1, m2));
            buf[m1 * n + m2] = buf[m1 * n + m2] * (s * scale);
        }
    }
    fft2_inverse(&mut buf, n);
    GridFunction::from_values(grid, buf).expect("same grid")
}

/// Radial cutoff: `1` for `|ζ| ≤ inner`, `0` for `|ζ| ≥ outer`, smooth between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialCutoff<T> {
    pub inner: T,
    pub outer: T,
}

impl<T: Real> Default for RadialCutoff<T> {
    fn default() -> Self {
        Self { inner: T::lit(4.0), outer: T::lit(8.0) }
    }
}

impl<T: Real> RadialCutoff<T> {
    pub fn eval(&self, r: T) -> T {
        smooth_step((self.outer - r) / (self.outer - self.inner))
    }
}

/// `‖u − χ(hD)u‖_∞`.
pub fn cutoff_defect<T: Real>(u: &GridFunction<T>, h: T, chi: RadialCutoff<T>) -> T {
    let low = fourier_multiplier(&FourierMultiplier::cutoff(h, chi), u);
    let one = num_complex::Complex::new(T::one(), T::zero());
    sup_norm(&u.combine(one, &low, -one).expect("same grid"))
}
