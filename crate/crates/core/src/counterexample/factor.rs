use num_complex::Complex;
use num_traits::Zero;

use super::CounterexampleError;
use crate::field::Grid1D;
use crate::scalar::Real;

/// A 1D band-limited function `f(x) = ∫ e^{ixξ} a(ξ) dξ`, discretized as
/// `Σ_m Δξ·a(ξ_m) e^{ixξ_m}` over the frequency lattice of its own periodic
/// grid and sampled there by one inverse FFT.
#[derive(Clone, Debug)]
pub struct Factor<T> {
    grid: Grid1D<T>,
    /// Nonzero lattice terms `(ξ_m, Δξ·a(ξ_m))`, ascending in `ξ`.
    spectrum: Vec<(T, T)>,
    values: Vec<Complex<T>>,
    derivative: Vec<Complex<T>>,
}

impl<T: Real> Factor<T> {
    /// Samples `a` on the lattice of `grid`. `band` must contain the support
    /// of `a` and lie strictly inside the Nyquist interval.
    pub fn synthesize(grid: Grid1D<T>, band: (T, T), a: impl Fn(T) -> T) -> Result<Self, CounterexampleError> {
        let nyquist = grid.nyquist();
        if !(band.0 > -nyquist && band.1 < nyquist) {
            return Err(CounterexampleError::NyquistViolation {
                band: (band.0.as_f64(), band.1.as_f64()),
                nyquist: nyquist.as_f64(),
            });
        }
        let n = grid.len();
        let step = grid.frequency_step();
        let mut spectrum = Vec::new();
        let mut bins = vec![Complex::zero(); n];
        let mut dbins = vec![Complex::zero(); n];
        for m in 0..n {
            let xi = grid.frequency(m);
            if xi < band.0 || xi > band.1 {
                continue;
            }
            let c = a(xi) * step;
            if c == T::zero() {
                continue;
            }
            spectrum.push((xi, c));
            // x_0 = −L, so sample n carries the phase e^{−iLξ} = (−1)^k
            let c = if grid.wavenumber_index(m) % 2 == 0 { c } else { -c };
            bins[m] = Complex::new(c, T::zero());
            dbins[m] = Complex::new(T::zero(), c * xi);
        }
        spectrum.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        T::fft_inverse(&mut bins, n);
        T::fft_inverse(&mut dbins, n);
        Ok(Self { grid, spectrum, values: bins, derivative: dbins })
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn spectrum(&self) -> &[(T, T)] {
        &self.spectrum
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn derivative(&self) -> &[Complex<T>] {
        &self.derivative
    }

    pub fn value_at_origin(&self) -> Complex<T> {
        self.values[self.grid.origin_index()]
    }

    /// `‖x^p f‖` (or `‖x^p f′‖`) by the midpoint rule over the box.
    pub fn moment_norm(&self, power: i32, derivative: bool) -> T {
        let v = if derivative { &self.derivative } else { &self.values };
        let s: T = v
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let w = self.grid.coord(i).powi(power);
                z.norm_sqr() * w * w
            })
            .sum();
        (s * self.grid.spacing()).sqrt()
    }

    pub fn l2_norm(&self) -> T {
        self.moment_norm(0, false)
    }

    /// `⟨f′, x f⟩`, the only cross term between `∂f` and `x f`.
    pub fn derivative_moment_product(&self) -> Complex<T> {
        let s = self
            .derivative
            .iter()
            .zip(&self.values)
            .enumerate()
            .fold(Complex::zero(), |acc: Complex<T>, (i, (d, v))| acc + d.conj() * *v * self.grid.coord(i));
        s * self.grid.spacing()
    }

    /// Largest `|x^p f(x)|` over the outer eighth of the box, relative to
    /// `‖x^p f‖`. Small values mean the periodic box does not clip the tails.
    pub fn edge_ratio(&self, power: i32) -> T {
        let cut = self.grid.half_width() * T::lit(0.875);
        let edge = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.coord(*i).abs() >= cut)
            .map(|(i, z)| z.norm() * self.grid.coord(i).abs().powi(power))
            .fold(T::zero(), T::max);
        edge / self.moment_norm(power, false)
    }

    /// Direct evaluation of the lattice sum and its derivative at `x`.
    pub fn eval(&self, x: T) -> (Complex<T>, Complex<T>) {
        let (Some(first), Some(_)) = (self.spectrum.first(), self.spectrum.last()) else {
            return (Complex::zero(), Complex::zero());
        };
        // the lattice is uniform, so the phases follow a geometric recurrence
        let step = self.grid.frequency_step();
        let rot = Complex::from_polar(T::one(), x * step);
        let mut phase = Complex::from_polar(T::one(), x * first.0);
        let (mut v, mut d) = (Complex::zero(), Complex::zero());
        let mut expected = first.0;
        for (k, &(xi, c)) in self.spectrum.iter().enumerate() {
            if xi != expected || k % 64 == 0 {
                phase = Complex::from_polar(T::one(), x * xi);
            }
            v += phase * c;
            d += phase * Complex::new(T::zero(), c * xi);
            phase *= rot;
            expected = xi + step;
        }
        (v, d)
    }

    /// Samples of this factor at the grid points of `other`, by direct
    /// evaluation.
    fn eval_on(&self, other: &Grid1D<T>) -> Vec<(Complex<T>, Complex<T>)> {
        (0..other.len()).map(|i| self.eval(other.coord(i))).collect()
    }

    /// `⟨x^p f, x^p g⟩` and `⟨x^p f′, x^p g′⟩`, each relative to the product
    /// of the two norms. The midpoint rule runs on the grid of the factor with
    /// the smaller box; the other factor is evaluated there directly.
    pub fn relative_overlaps(&self, other: &Self, power: i32) -> (T, T) {
        // |⟨f, g⟩| = |⟨g, f⟩|, so the order does not matter
        let (narrow, wide) = if self.grid.half_width() <= other.grid.half_width() { (self, other) } else { (other, self) };
        let wide_vals = wide.eval_on(&narrow.grid);
        let (mut plain, mut deriv) = (Complex::zero(), Complex::zero());
        for (i, (w, wd)) in wide_vals.iter().enumerate() {
            let x = narrow.grid.coord(i).powi(2 * power);
            plain += w.conj() * narrow.values[i] * x;
            deriv += wd.conj() * narrow.derivative[i] * x;
        }
        let dx = narrow.grid.spacing();
        let (plain, deriv) = (plain * dx, deriv * dx);
        (
            plain.norm() / (self.moment_norm(power, false) * other.moment_norm(power, false)),
            deriv.norm() / (self.moment_norm(power, true) * other.moment_norm(power, true)),
        )
    }
}
