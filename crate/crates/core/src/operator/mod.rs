//! The semiclassical operator `P = −h²Δ_g + V` and Fourier multipliers.

mod multiplier;

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{l2_norm, FieldError, Grid2D, GridFunction, MetricField, PotentialField};
use crate::scalar::Real;

pub use multiplier::{cutoff_defect, fourier_multiplier, FourierMultiplier, RadialCutoff};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("semiclassical parameter must lie in (0, 1], got {0}")]
    InvalidH(f64),
    #[error("spectral backend needs a constant metric")]
    SpectralNeedsConstantMetric,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// 9-point divergence-form stencil.
    #[default]
    FiniteDifference,
    /// Exact symbol via FFT; constant metrics only.
    Spectral,
}

/// Element type the stencil can act on (real or complex samples).
pub trait Sample<T>: Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> + Send + Sync {}

impl<T, S> Sample<T> for S where S: Copy + Zero + Add<Output = S> + Sub<Output = S> + Mul<T, Output = S> + Send + Sync {}

/// `P = −h²Δ_g + V` on a periodic grid, with coefficients sampled at assembly.
#[derive(Clone, Debug)]
pub struct SemiclassicalOperator<T: Real> {
    h: T,
    grid: Grid2D<T>,
    backend: Backend,
    metric: MetricField<T>,
    potential: PotentialField<T>,
    v: Vec<T>,
    sqrt_det: Vec<T>,
    // flux g^{ij}√ḡ: a11 at (i+½, j), a22 at (i, j+½), a12 at (i+½, j+½)
    a11: Vec<T>,
    a22: Vec<T>,
    a12: Option<Vec<T>>,
    // constant inverse metric for the spectral backend
    g0: [[T; 2]; 2],
    // h²·symbol / N² per FFT bin (spectral backend only)
    symbol: Vec<T>,
}

/// Builds `P`. Fails on `h ∉ (0, 1]`, a metric that is not positive definite
/// on the grid, or a spectral backend with a variable metric.
pub fn assemble<T: Real>(
    h: T,
    metric: &MetricField<T>,
    potential: &PotentialField<T>,
    grid: Grid2D<T>,
    backend: Backend,
) -> Result<SemiclassicalOperator<T>, OperatorError> {
    if !(h > T::zero() && h <= T::one()) {
        return Err(OperatorError::InvalidH(h.as_f64()));
    }
    if backend == Backend::Spectral && !metric.is_constant() {
        return Err(OperatorError::SpectralNeedsConstantMetric);
    }
    metric.check_positive_definite(&grid)?;
    let n = grid.points_per_dim();
    let half = grid.spacing() * T::lit(0.5);
    let sample = |f: &(dyn Fn([T; 2]) -> T + Sync), off: [T; 2]| -> Vec<T> {
        (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let x = grid.point_of(k);
                f([x[0] + off[0], x[1] + off[1]])
            })
            .collect()
    };
    let zero = T::zero();
    let v = sample(&|x| potential.v(x), [zero, zero]);
    let sqrt_det = sample(&|x| metric.sqrt_det(x), [zero, zero]);
    let a11 = sample(&|x| metric.flux(x)[0][0], [half, zero]);
    let a22 = sample(&|x| metric.flux(x)[1][1], [zero, half]);
    let a12 = sample(&|x| metric.flux(x)[0][1], [half, half]);
    let a12 = if a12.iter().all(|a| *a == zero) { None } else { Some(a12) };
    let g0 = metric.inverse_metric([zero, zero]);
    let symbol = match backend {
        Backend::FiniteDifference => Vec::new(),
        Backend::Spectral => {
            let h2 = h * h / T::from_usize_exact(n * n);
            let axis = grid.axis();
            let two = T::lit(2.0);
            (0..n * n)
                .map(|k| {
                    let (m1, m2) = (k / n, k % n);
                    let (k1, k2) = (axis.frequency(m1), axis.frequency(m2));
                    // the odd factor of the mixed term vanishes on the Nyquist
                    // line so that real samples stay real
                    let (o1, o2) = (odd_part(axis, m1), odd_part(axis, m2));
                    h2 * (g0[0][0] * k1 * k1 + two * g0[0][1] * o1 * o2 + g0[1][1] * k2 * k2)
                })
                .collect()
        }
    };
    Ok(SemiclassicalOperator {
        h,
        grid,
        backend,
        metric: metric.clone(),
        potential: potential.clone(),
        v,
        sqrt_det,
        a11,
        a22,
        a12,
        g0,
        symbol,
    })
}

impl<T: Real> SemiclassicalOperator<T> {
    pub fn h(&self) -> T {
        self.h
    }

    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn metric(&self) -> &MetricField<T> {
        &self.metric
    }

    pub fn potential(&self) -> &PotentialField<T> {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// `V` sampled at the nodes.
    pub fn potential_samples(&self) -> &[T] {
        &self.v
    }

    /// `√ḡ` at the nodes; `P` is symmetric in `⟨u, v⟩_{√ḡ}`.
    pub fn volume_weights(&self) -> &[T] {
        &self.sqrt_det
    }

    pub fn apply(&self, u: &GridFunction<T>) -> Result<GridFunction<T>, OperatorError> {
        if u.grid() != &self.grid {
            return Err(FieldError::GridMismatch.into());
        }
        let mut out = vec![Complex::zero(); self.dim()];
        match self.backend {
            Backend::FiniteDifference => self.apply_fd(u.values(), &mut out),
            Backend::Spectral => {
                out.copy_from_slice(u.values());
                self.apply_spectral_in_place(&mut out);
            }
        }
        Ok(GridFunction::from_values(self.grid, out)?)
    }

    /// `out = P u` for real samples (row-major).
    pub fn apply_real(&self, u: &[T], out: &mut [T]) {
        assert_eq!(u.len(), self.dim());
        match self.backend {
            Backend::FiniteDifference => self.apply_fd(u, out),
            Backend::Spectral => {
                let mut buf: Vec<Complex<T>> = u.iter().map(|&x| Complex::new(x, T::zero())).collect();
                self.apply_spectral_in_place(&mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re;
                }
            }
        }
    }

    fn apply_fd<S: Sample<T>>(&self, u: &[S], out: &mut [S]) {
        let n = self.grid.points_per_dim();
        let dx = self.grid.spacing();
        let inv_dx2 = (dx * dx).recip();
        let quarter = T::lit(0.25) * inv_dx2;
        let h2 = self.h * self.h;
        let at = |i: usize, j: usize| u[(i % n) * n + (j % n)];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            for (j, o) in row.iter_mut().enumerate() {
                let jm = (j + n - 1) % n;
                let jp = (j + 1) % n;
                let c = at(i, j);
                // −div(a∇u) from the four faces
                let mut acc = (c - at(ip, j)) * self.a11[i * n + j]
                    + (c - at(im, j)) * self.a11[im * n + j]
                    + (c - at(i, jp)) * self.a22[i * n + j]
                    + (c - at(i, jm)) * self.a22[i * n + jm];
                acc = acc * inv_dx2;
                if let Some(a12) = &self.a12 {
                    // corner (p+½, q+½) with signs (s1, s2) of this node in that cell
                    let corner = |p: usize, q: usize, s1: T, s2: T| -> S {
                        let (pp, qp) = ((p + 1) % n, (q + 1) % n);
                        let d1 = at(pp, q) + at(pp, qp) - at(p, q) - at(p, qp);
                        let d2 = at(p, qp) + at(pp, qp) - at(p, q) - at(pp, q);
                        let a = a12[p * n + q];
                        // q1 = a·D2u pairs with ∂D1, q2 = a·D1u pairs with ∂D2
                        d2 * (a * s1) + d1 * (a * s2)
                    };
                    let one = T::one();
                    let mixed = corner(i, j, -one, -one)
                        + corner(im, j, one, -one)
                        + corner(i, jm, -one, one)
                        + corner(im, jm, one, one);
                    acc = acc + mixed * quarter;
                }
                *o = acc * (h2 / self.sqrt_det[i * n + j]) + c * self.v[i * n + j];
            }
        });
    }

    /// `P a` and `P b` for real `a`, `b`; the spectral backend handles both
    /// with one complex transform.
    pub fn apply_real_pair(&self, a: &[T], b: &[T], out_a: &mut [T], out_b: &mut [T]) {
        match self.backend {
            Backend::FiniteDifference => {
                self.apply_fd(a, out_a);
                self.apply_fd(b, out_b);
            }
            Backend::Spectral => {
                let mut buf: Vec<Complex<T>> = a.iter().zip(b).map(|(&x, &y)| Complex::new(x, y)).collect();
                self.apply_spectral_in_place(&mut buf);
                for ((oa, ob), c) in out_a.iter_mut().zip(out_b.iter_mut()).zip(&buf) {
                    *oa = c.re;
                    *ob = c.im;
                }
            }
        }
    }

    fn apply_spectral_in_place(&self, buf: &mut [Complex<T>]) {
        let n = self.grid.points_per_dim();
        let orig: Vec<Complex<T>> = buf.to_vec();
        crate::scalar::fft2_forward(buf, n);
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b = *b * *s;
        }
        crate::scalar::fft2_inverse(buf, n);
        for ((b, o), v) in buf.iter_mut().zip(&orig).zip(&self.v) {
            *b += *o * *v;
        }
    }

    /// Interval containing the spectrum of `P`: `[min V, upper]`, with the
    /// upper end a Gershgorin (FD) or symbol (spectral) bound.
    pub fn spectrum_bounds(&self) -> (T, T) {
        let vmin = self.v.iter().copied().fold(T::infinity(), T::min);
        let vmax = self.v.iter().copied().fold(T::neg_infinity(), T::max);
        let h2 = self.h * self.h;
        let kinetic = match self.backend {
            Backend::FiniteDifference => {
                let dx = self.grid.spacing();
                let amax = self.a11.iter().chain(&self.a22).copied().fold(T::zero(), T::max);
                let bmax = self.a12.as_ref().map_or(T::zero(), |a| a.iter().map(|x| x.abs()).fold(T::zero(), T::max));
                let wmax = self.sqrt_det.iter().map(|s| s.recip()).fold(T::zero(), T::max);
                wmax * (T::lit(8.0) * amax + T::lit(8.0) * bmax) / (dx * dx)
            }
            Backend::Spectral => {
                let g = self.g0;
                let half = T::lit(0.5);
                let lam = half * (g[0][0] + g[1][1]) + (half * (g[0][0] - g[1][1])).hypot(g[0][1]);
                let k = self.grid.axis().nyquist();
                lam * T::lit(2.0) * k * k
            }
        };
        (vmin, vmax + h2 * kinetic)
    }
}

/// Frequency of bin `m` with the unpaired Nyquist bin set to zero.
pub(crate) fn odd_part<T: Real>(axis: &crate::field::Grid1D<T>, m: usize) -> T {
    if m == axis.len() / 2 {
        T::zero()
    } else {
        axis.frequency(m)
    }
}

/// `(‖Pu‖, ‖u‖)`; `u` is a weak quasimode when the first is `≤ h` and the
/// second `≤ 1`.
pub fn residual<T: Real>(p: &SemiclassicalOperator<T>, u: &GridFunction<T>) -> Result<(T, T), OperatorError> {
    let pu = p.apply(u)?;
    Ok((l2_norm(&pu), l2_norm(u)))
}
