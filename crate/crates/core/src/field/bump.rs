use crate::scalar::{smooth_step, Real};

/// The two compactly supported profiles used by the counterexample.
///
/// `ψ(x) = c_ψ exp(−1/(1 − (2x − 3)²))` on `(1, 2)`, with `∫ψ = 1`.
/// `χ(t) = S(1 − |t|)` on `(−1, 1)` with `S` the flat smooth step; then
/// `χ(0) = 1`, `0 ≤ χ ≤ 1` and `∫χ = 1` (by `S(τ) + S(1 − τ) = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpProfile<T> {
    c_psi: T,
}

fn raw_psi<T: Real>(x: T) -> T {
    let s = T::lit(2.0) * x - T::lit(3.0);
    let q = T::one() - s * s;
    if q > T::zero() {
        (-q.recip()).exp()
    } else {
        T::zero()
    }
}

/// Trapezoid rule over `[a, b]` with `2^levels` panels. Spectrally accurate
/// for functions that are flat at both ends.
fn flat_quadrature<T: Real>(f: impl Fn(T) -> T, a: T, b: T, levels: u32) -> T {
    let n = 1usize << levels;
    let step = (b - a) / T::from_usize_exact(n);
    (1..n).map(|i| f(a + T::from_usize_exact(i) * step)).sum::<T>() * step
}

impl<T: Real> Default for BumpProfile<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> BumpProfile<T> {
    pub fn new() -> Self {
        let mass = flat_quadrature(raw_psi::<T>, T::one(), T::lit(2.0), 14);
        Self { c_psi: mass.recip() }
    }

    pub fn c_psi(&self) -> T {
        self.c_psi
    }

    pub fn psi(&self, x: T) -> T {
        self.c_psi * raw_psi(x)
    }

    pub fn chi(&self, t: T) -> T {
        smooth_step(T::one() - t.abs())
    }

    pub fn psi_support(&self) -> (T, T) {
        (T::one(), T::lit(2.0))
    }

    pub fn chi_support(&self) -> (T, T) {
        (-T::one(), T::one())
    }

    /// `Σ_m ψ(m·step)·step`, the rectangle rule on the frequency lattice.
    pub fn psi_integral(&self, step: T) -> T {
        lattice_sum(|x| self.psi(x), self.psi_support(), step)
    }

    pub fn chi_integral(&self, step: T) -> T {
        lattice_sum(|t| self.chi(t), self.chi_support(), step)
    }

    pub fn psi_l2(&self) -> T {
        flat_quadrature(|x| self.psi(x).powi(2), T::one(), T::lit(2.0), 14).sqrt()
    }

    pub fn chi_l2(&self) -> T {
        flat_quadrature(|t| self.chi(t).powi(2), -T::one(), T::one(), 15).sqrt()
    }

    /// `ψ(m·step)` for lattice points `m·step` in `[lo, hi]`, as `(m, value)`.
    pub fn sample_psi(&self, step: T) -> Vec<(i64, T)> {
        lattice_samples(|x| self.psi(x), self.psi_support(), step)
    }

    pub fn sample_chi(&self, step: T) -> Vec<(i64, T)> {
        lattice_samples(|t| self.chi(t), self.chi_support(), step)
    }
}

fn lattice_samples<T: Real>(f: impl Fn(T) -> T, (lo, hi): (T, T), step: T) -> Vec<(i64, T)> {
    let first = (lo / step).ceil().to_i64().unwrap();
    let last = (hi / step).floor().to_i64().unwrap();
    (first..=last).map(|m| (m, f(T::lit(m as f64) * step))).filter(|&(_, v)| v != T::zero()).collect()
}

fn lattice_sum<T: Real>(f: impl Fn(T) -> T, support: (T, T), step: T) -> T {
    lattice_samples(f, support, step).into_iter().map(|(_, v)| v).sum::<T>() * step
}
