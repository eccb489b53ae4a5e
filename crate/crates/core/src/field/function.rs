use num_complex::Complex;
use num_traits::Zero;

use super::{FieldError, Grid2D};
use crate::scalar::{fft2_forward, fft2_inverse, Real};

/// Complex samples of a function on a [`Grid2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    grid: Grid2D<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn zeros(grid: Grid2D<T>) -> Self {
        Self { grid, values: vec![Complex::zero(); grid.len()] }
    }

    pub fn from_values(grid: Grid2D<T>, values: Vec<Complex<T>>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D<T>, f: impl Fn([T; 2]) -> Complex<T>) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point_of(k))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid2D<T>, f: impl Fn([T; 2]) -> T) -> Self {
        Self::from_fn(grid, |x| Complex::new(f(x), T::zero()))
    }

    /// Real samples, e.g. an eigenvector from the real symmetric solver.
    pub fn from_real(grid: Grid2D<T>, values: &[T]) -> Result<Self, FieldError> {
        Self::from_values(grid, values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn at(&self, i1: usize, i2: usize) -> Complex<T> {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn value_at_origin(&self) -> Complex<T> {
        self.values[self.grid.origin_index()]
    }

    pub fn scaled(&self, a: Complex<T>) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| v * a).collect() }
    }

    pub fn map(&self, f: impl Fn([T; 2], Complex<T>) -> Complex<T>) -> Self {
        let values = self.values.iter().enumerate().map(|(k, &v)| f(self.grid.point_of(k), v)).collect();
        Self { grid: self.grid, values }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self, FieldError> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| x * a + y * b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(())
    }

    /// Unnormalized 2D DFT of the samples (FFT bin order).
    pub fn spectrum(&self) -> Vec<Complex<T>> {
        let mut out = self.values.clone();
        fft2_forward(&mut out, self.grid.points_per_dim());
        out
    }

    /// Inverse of [`GridFunction::spectrum`].
    pub fn from_spectrum(grid: Grid2D<T>, mut spectrum: Vec<Complex<T>>) -> Result<Self, FieldError> {
        if spectrum.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), found: spectrum.len() });
        }
        fft2_inverse(&mut spectrum, grid.points_per_dim());
        let scale = T::from_usize_exact(grid.len()).recip();
        for v in spectrum.iter_mut() {
            *v = *v * scale;
        }
        Ok(Self { grid, values: spectrum })
    }

    pub fn l2_norm(&self) -> T {
        l2_norm(self)
    }

    pub fn sup_norm(&self) -> T {
        sup_norm(self)
    }
}

/// Midpoint-rule `L²` norm, `(Σ |u|² dx²)^{1/2}`.
pub fn l2_norm<T: Real>(u: &GridFunction<T>) -> T {
    let s: T = u.values.iter().map(|v| v.norm_sqr()).sum();
    (s * u.grid.cell_area()).sqrt()
}

/// Largest sample modulus. This is a lower bound for the continuum supremum;
/// see [`sup_norm_refined`] for a local quadratic correction.
pub fn sup_norm<T: Real>(u: &GridFunction<T>) -> T {
    u.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
}

/// Sample supremum corrected by fitting a separable parabola to `|u|` at the
/// argmax and its four neighbours (periodic wrap). Never smaller than
/// [`sup_norm`].
pub fn sup_norm_refined<T: Real>(u: &GridFunction<T>) -> T {
    let n = u.grid.points_per_dim();
    let (best, peak) = u
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| (k, v.norm()))
        .fold((0, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
    if n < 3 {
        return peak;
    }
    let (i, j) = (best / n, best % n);
    let m = |a: usize, b: usize| u.at(a % n, b % n).norm();
    let half = T::lit(0.5);
    let mut correction = T::zero();
    for (lo, hi) in [(m(i + n - 1, j), m(i + 1, j)), (m(i, j + n - 1), m(i, j + 1))] {
        let curv = lo + hi - peak - peak;
        if curv < T::zero() {
            let slope = half * (hi - lo);
            correction += -half * slope * slope / curv;
        }
    }
    peak + correction
}

/// Midpoint-rule `⟨u, v⟩ = Σ conj(u) v dx²`.
pub fn inner_product<T: Real>(u: &GridFunction<T>, v: &GridFunction<T>) -> Result<Complex<T>, FieldError> {
    u.check_same_grid(v)?;
    let s = u.values.iter().zip(&v.values).fold(Complex::zero(), |acc: Complex<T>, (a, b)| acc + a.conj() * b);
    Ok(s * u.grid.cell_area())
}

/// `L²` norm of `w·u` for a real weight `w(x)`.
pub fn weighted_norm<T: Real>(u: &GridFunction<T>, w: impl Fn([T; 2]) -> T) -> T {
    let s: T = u
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let wk = w(u.grid.point_of(k));
            v.norm_sqr() * wk * wk
        })
        .sum();
    (s * u.grid.cell_area()).sqrt()
}

/// `L²` norm restricted to the open disk `|x| < radius`.
pub fn l2_norm_on_disk<T: Real>(u: &GridFunction<T>, radius: T) -> T {
    let r2 = radius * radius;
    weighted_norm(u, |x| if x[0] * x[0] + x[1] * x[1] < r2 { T::one() } else { T::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(h: f64) -> impl Fn([f64; 2]) -> f64 {
        move |x| (PI * h).powf(-0.5) * (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * h)).exp()
    }

    #[test]
    fn zero_function_norms() {
        let g = Grid2D::<f64>::new(1.0, 16).unwrap();
        let u = GridFunction::<f64>::zeros(g);
        assert_eq!(l2_norm(&u), 0.0);
        assert_eq!(sup_norm(&u), 0.0);
    }

    #[test]
    fn constant_on_unit_box() {
        let g = Grid2D::<f64>::new(1.0, 32).unwrap();
        let u = GridFunction::from_real_fn(g, |_| 1.0);
        assert!((l2_norm(&u) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn harmonic_ground_state_norms() {
        // closed forms: ∫|φ₀|² = 1 and φ₀(0) = (πh)^{-1/2}
        let h = 0.125;
        let g = Grid2D::<f64>::new(4.0, 128).unwrap();
        let u = GridFunction::from_real_fn(g, gaussian(h));
        assert!((l2_norm(&u) - 1.0).abs() < 1e-8);
        assert!((sup_norm(&u) - (PI / 8.0).powf(-0.5)).abs() < 1e-8);
    }

    #[test]
    fn plane_wave_sup() {
        let l = 2.0;
        let g = Grid2D::<f64>::new(l, 32).unwrap();
        let k = [PI / l * 3.0, -PI / l * 5.0];
        let u = GridFunction::from_fn(g, |x| Complex::from_polar(1.0 / (2.0 * l), k[0] * x[0] + k[1] * x[1]));
        assert!((sup_norm(&u) - 1.0 / (2.0 * l)).abs() < 1e-15);
    }

    #[test]
    fn plane_waves_orthogonal() {
        let g = Grid2D::<f64>::new(PI, 16).unwrap();
        let e = |k1: f64, k2: f64| GridFunction::from_fn(g, move |x| Complex::from_polar(1.0, k1 * x[0] + k2 * x[1]));
        let ip = inner_product(&e(1.0, 2.0), &e(2.0, 1.0)).unwrap();
        assert!(ip.norm() < 1e-13);
        let self_ip = inner_product(&e(1.0, 2.0), &e(1.0, 2.0)).unwrap();
        assert!((self_ip.re - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = GridFunction::<f64>::zeros(Grid2D::<f64>::new(1.0, 8).unwrap());
        let b = GridFunction::<f64>::zeros(Grid2D::<f64>::new(1.0, 16).unwrap());
        assert!(matches!(inner_product(&a, &b), Err(FieldError::GridMismatch)));
    }

    #[test]
    fn refined_sup_is_not_smaller() {
        let g = Grid2D::<f64>::new(4.0, 64).unwrap();
        let u = GridFunction::from_real_fn(g, |x| (-((x[0] - 0.03) * (x[0] - 0.03) + x[1] * x[1])).exp());
        let raw = sup_norm(&u);
        let refined = sup_norm_refined(&u);
        assert!(refined >= raw);
        assert!((refined - 1.0).abs() < (raw - 1.0).abs());
    }

    #[test]
    fn weighted_norm_unit_weight() {
        let g = Grid2D::<f64>::new(3.0, 64).unwrap();
        let u = GridFunction::from_real_fn(g, gaussian(0.3));
        assert!((weighted_norm(&u, |_| 1.0) - l2_norm(&u)).abs() < 1e-15);
    }

    #[test]
    fn spectrum_roundtrip() {
        let g = Grid2D::<f64>::new(2.0, 16).unwrap();
        let u = GridFunction::from_fn(g, |x| Complex::new(x[0].sin(), x[1] * x[0]));
        let back = GridFunction::from_spectrum(g, u.spectrum()).unwrap();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
