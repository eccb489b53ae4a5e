//! Eigenpairs of `P` near a target energy and spectral clusters.

mod dense;
mod folded;
mod kpm;
mod torus;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{inner_product, FieldError, GridFunction};
use crate::operator::{Backend, SemiclassicalOperator};
use crate::scalar::{fft2_forward, fft2_inverse, Real};

pub use dense::symmetric_eigen;
use folded::{Failure, ShiftedOperator, SolverSettings, Target};
pub use torus::{coherent_torus_cluster, torus_modes, TorusCluster};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("eigensolver did not converge in {iterations} iterations (largest residual {max_residual:e})")]
    NotConverged { iterations: usize, max_residual: f64 },
    #[error("window holds more than {max_count} eigenvalues (estimated {estimated:.1})")]
    WindowOverflow { max_count: usize, estimated: f64 },
    #[error("window half-width must be positive, got {0}")]
    InvalidWindow(f64),
    #[error("coefficient norm {0} exceeds 1")]
    CoefficientNorm(f64),
    #[error("{pairs} eigenpairs but {coefficients} coefficients")]
    CoefficientCount { pairs: usize, coefficients: usize },
    #[error("eigenvalue {value} outside the cluster window |E| ≤ {bound}")]
    OutsideWindow { value: f64, bound: f64 },
    #[error("no lattice modes in the annulus at h = {h}")]
    EmptyCluster { h: f64 },
    #[error("wavenumber {wavenumber} not representable with {points} points per side")]
    NyquistViolation { wavenumber: i64, points: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `{E : |E − center| ≤ half_width}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow<T> {
    pub center: T,
    pub half_width: T,
}

impl<T: Real> EnergyWindow<T> {
    /// `|E| ≤ Ch`.
    pub fn cluster(width_constant: T, h: T) -> Self {
        Self { center: T::zero(), half_width: width_constant * h }
    }

    pub fn contains(&self, e: T) -> bool {
        (e - self.center).abs() <= self.half_width * (T::one() + T::lit(folded::WINDOW_SLACK))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    /// Required `‖Pw − Ew‖` for unit `w`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_block: usize,
    pub seed: u64,
    pub kpm_probes: usize,
    pub kpm_max_degree: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 4000, initial_block: 4, seed: 0x5eed, kpm_probes: 16, kpm_max_degree: 4000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair<T> {
    pub value: T,
    /// Unit norm in `L²(√ḡ dx)`.
    pub vector: GridFunction<T>,
    /// `‖Pw − Ew‖`.
    pub residual: T,
}

/// `S = ḡ^{1/4} P ḡ^{−1/4} − σ`, symmetric in the plain inner product.
struct Shifted<'a, T: Real> {
    p: &'a SemiclassicalOperator<T>,
    sigma: T,
    quarter: Option<Vec<T>>,
    precond: Vec<T>,
}

impl<'a, T: Real> Shifted<'a, T> {
    fn new(p: &'a SemiclassicalOperator<T>, sigma: T, half_width: T) -> Self {
        let w = p.volume_weights();
        let quarter = if w.iter().all(|x| *x == T::one()) { None } else { Some(w.iter().map(|x| x.sqrt()).collect()) };
        let grid = *p.grid();
        let n = grid.points_per_dim();
        let h = p.h();
        let v = p.potential_samples();
        let count = T::from_usize_exact(v.len());
        let mean = v.iter().copied().sum::<T>() / count;
        let spread = (v.iter().map(|x| (*x - mean) * (*x - mean)).sum::<T>() / count).sqrt();
        let c = mean - sigma;
        let s = spread.max(half_width).max(T::lit(1e-3) * h);
        let g = p.metric().inverse_metric([T::zero(), T::zero()]);
        let dx = grid.spacing();
        let half = T::lit(0.5);
        let wave = |m: usize| -> T {
            let xi = grid.axis().frequency(m);
            match p.backend() {
                Backend::Spectral => xi,
                Backend::FiniteDifference => (xi * dx * half).sin() * T::lit(2.0) / dx,
            }
        };
        let odd = |m: usize| if m == n / 2 { T::zero() } else { wave(m) };
        let mut precond = vec![T::zero(); n * n];
        for m1 in 0..n {
            let k1 = wave(m1);
            for m2 in 0..n {
                let k2 = wave(m2);
                let q = h * h * (g[0][0] * k1 * k1 + T::lit(2.0) * g[0][1] * odd(m1) * odd(m2) + g[1][1] * k2 * k2);
                precond[m1 * n + m2] = ((q + c) * (q + c) + s * s).recip() / T::from_usize_exact(n * n);
            }
        }
        Self { p, sigma, quarter, precond }
    }

    fn spectrum_bounds(&self) -> (T, T) {
        let (lo, hi) = self.p.spectrum_bounds();
        (lo - self.sigma, hi - self.sigma)
    }
}

impl<T: Real> ShiftedOperator<T> for Shifted<'_, T> {
    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        match &self.quarter {
            None => {
                self.p.apply_real(x, y);
            }
            Some(d) => {
                let tmp: Vec<T> = x.iter().zip(d).map(|(a, b)| *a / *b).collect();
                self.p.apply_real(&tmp, y);
                for (yi, di) in y.iter_mut().zip(d) {
                    *yi *= *di;
                }
            }
        }
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= self.sigma * *xi;
        }
    }

    fn precondition(&self, r: &[T], out: &mut [T]) {
        let mut other = vec![T::zero(); r.len()];
        self.precondition_pair(r, r, out, &mut other);
    }

    fn apply_many(&self, xs: &[Vec<T>]) -> Vec<Vec<T>> {
        paired(xs, self.dim(), |a, b, oa, ob| {
            let scaled = |x: &[T]| -> Vec<T> {
                match &self.quarter {
                    None => x.to_vec(),
                    Some(d) => x.iter().zip(d).map(|(a, b)| *a / *b).collect(),
                }
            };
            self.p.apply_real_pair(&scaled(a), &scaled(b), oa, ob);
            for (y, x) in [(oa, a), (ob, b)] {
                if let Some(d) = &self.quarter {
                    for (yi, di) in y.iter_mut().zip(d) {
                        *yi *= *di;
                    }
                }
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi -= self.sigma * *xi;
                }
            }
        })
    }

    fn precondition_many(&self, rs: &[Vec<T>]) -> Vec<Vec<T>> {
        paired(rs, self.dim(), |a, b, oa, ob| self.precondition_pair(a, b, oa, ob))
    }
}

impl<T: Real> Shifted<'_, T> {
    // the preconditioner symbol is real and even, so two real vectors share
    // one complex transform
    fn precondition_pair(&self, a: &[T], b: &[T], oa: &mut [T], ob: &mut [T]) {
        let n = self.p.grid().points_per_dim();
        let mut buf: Vec<Complex<T>> = a.iter().zip(b).map(|(&x, &y)| Complex::new(x, y)).collect();
        fft2_forward(&mut buf, n);
        for (c, m) in buf.iter_mut().zip(&self.precond) {
            *c = *c * *m;
        }
        fft2_inverse(&mut buf, n);
        for ((x, y), c) in oa.iter_mut().zip(ob.iter_mut()).zip(&buf) {
            *x = c.re;
            *y = c.im;
        }
    }
}

/// Applies a two-at-a-time kernel over a list of vectors.
fn paired<T: Real>(xs: &[Vec<T>], n: usize, f: impl Fn(&[T], &[T], &mut [T], &mut [T]) + Sync) -> Vec<Vec<T>> {
    use rayon::prelude::*;
    let chunks: Vec<Vec<Vec<T>>> = xs
        .par_chunks(2)
        .map(|c| {
            let mut oa = vec![T::zero(); n];
            let mut ob = vec![T::zero(); n];
            let b = c.get(1).unwrap_or(&c[0]);
            f(&c[0], b, &mut oa, &mut ob);
            if c.len() == 2 {
                vec![oa, ob]
            } else {
                vec![oa]
            }
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

fn settings<T: Real>(opts: &EigenOptions) -> SolverSettings<T> {
    SolverSettings {
        tolerance: T::lit(opts.tolerance),
        guard_tolerance: T::lit(1e-6).max(T::lit(opts.tolerance)),
        max_iterations: opts.max_iterations,
        initial_block: opts.initial_block,
        refresh_every: 10,
        seed: opts.seed,
    }
}

fn into_pairs<T: Real>(op: &Shifted<'_, T>, sol: folded::Solution<T>) -> Result<Vec<EigenPair<T>>, SpectralError> {
    let grid = *op.p.grid();
    let inv_dx = grid.spacing().recip();
    sol.values
        .into_iter()
        .zip(sol.vectors)
        .zip(sol.residuals)
        .map(|((mu, y), r)| {
            let vals: Vec<T> = match &op.quarter {
                None => y.iter().map(|v| *v * inv_dx).collect(),
                Some(d) => y.iter().zip(d).map(|(v, di)| *v * inv_dx / *di).collect(),
            };
            Ok(EigenPair { value: mu + op.sigma, vector: GridFunction::from_real(grid, &vals)?, residual: r })
        })
        .collect()
}

fn not_converged<T: Real>(iterations: usize, residuals: &[T]) -> SpectralError {
    let max_residual = residuals.iter().map(|r| r.as_f64()).fold(0.0, f64::max);
    SpectralError::NotConverged { iterations, max_residual }
}

/// All eigenpairs of `P` with eigenvalue in `window`, ascending.
///
/// Folded-spectrum block iteration. If the window holds more than
/// `max_count` eigenvalues the error carries a stochastic count estimate.
pub fn interior_eigenpairs<T: Real>(
    p: &SemiclassicalOperator<T>,
    window: EnergyWindow<T>,
    max_count: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair<T>>, SpectralError> {
    if !(window.half_width > T::zero()) {
        return Err(SpectralError::InvalidWindow(window.half_width.as_f64()));
    }
    let op = Shifted::new(p, window.center, window.half_width);
    match folded::solve(&op, Target::Window { half_width: window.half_width, max_count }, &settings(opts)) {
        Ok(sol) => into_pairs(&op, sol),
        Err(Failure::NotConverged { iterations, residuals }) => Err(not_converged(iterations, &residuals)),
        Err(Failure::Overflow { .. }) => {
            let estimated = estimate_count_with(&op, window.half_width, opts).as_f64();
            Err(SpectralError::WindowOverflow { max_count, estimated })
        }
    }
}

/// The `count` eigenpairs closest to `sigma`, ascending.
pub fn nearest_eigenpairs<T: Real>(
    p: &SemiclassicalOperator<T>,
    sigma: T,
    count: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair<T>>, SpectralError> {
    let op = Shifted::new(p, sigma, p.h());
    match folded::solve(&op, Target::Nearest { count }, &settings(opts)) {
        Ok(sol) => into_pairs(&op, sol),
        Err(Failure::NotConverged { iterations, residuals }) => Err(not_converged(iterations, &residuals)),
        Err(Failure::Overflow { .. }) => unreachable!("nearest mode has a fixed block"),
    }
}

fn estimate_count_with<T: Real>(op: &Shifted<'_, T>, half_width: T, opts: &EigenOptions) -> T {
    let (lo, hi) = op.spectrum_bounds();
    let degree = ((T::lit(4.0) * (hi - lo) / half_width).ceil().to_usize().unwrap_or(usize::MAX)).clamp(50, opts.kpm_max_degree);
    kpm::estimate_count(op, half_width, (lo, hi), opts.kpm_probes, degree, opts.seed)
}

/// Stochastic estimate of the number of eigenvalues of `P` in `window`.
pub fn estimate_eigenvalue_count<T: Real>(p: &SemiclassicalOperator<T>, window: EnergyWindow<T>, opts: &EigenOptions) -> T {
    let op = Shifted::new(p, window.center, window.half_width);
    estimate_count_with(&op, window.half_width, opts)
}

/// `w = Σ c_j w_j` over eigenpairs with `|E_j| ≤ Ch`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCluster<T> {
    pub h: T,
    pub width_constant: T,
    pub eigenvalues: Vec<T>,
    pub eigenfunctions: Vec<GridFunction<T>>,
    pub coefficients: Vec<Complex<T>>,
}

impl<T: Real> SpectralCluster<T> {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest `|⟨w_j, w_k⟩ − δ_jk|`.
    pub fn orthonormality_defect(&self) -> Result<T, SpectralError> {
        let mut worst = T::zero();
        for (j, a) in self.eigenfunctions.iter().enumerate() {
            for (k, b) in self.eigenfunctions.iter().enumerate().skip(j) {
                let want = if j == k { T::one() } else { T::zero() };
                worst = worst.max((inner_product(a, b)? - Complex::new(want, T::zero())).norm());
            }
        }
        Ok(worst)
    }
}

/// Forms `w = Σ c_j w_j`. Requires `Σ|c_j|² ≤ 1` and every `|E_j| ≤ Ch`; then
/// `‖Pw‖ ≤ Ch` (up to the eigen-residuals).
pub fn build_cluster<T: Real>(
    h: T,
    width_constant: T,
    pairs: &[EigenPair<T>],
    coefficients: &[Complex<T>],
) -> Result<(SpectralCluster<T>, GridFunction<T>), SpectralError> {
    if pairs.len() != coefficients.len() {
        return Err(SpectralError::CoefficientCount { pairs: pairs.len(), coefficients: coefficients.len() });
    }
    let norm2: T = coefficients.iter().map(|c| c.norm_sqr()).sum();
    if norm2 > T::one() + T::lit(1e-12) {
        return Err(SpectralError::CoefficientNorm(norm2.sqrt().as_f64()));
    }
    let window = EnergyWindow::cluster(width_constant, h);
    if let Some(bad) = pairs.iter().find(|p| !window.contains(p.value)) {
        return Err(SpectralError::OutsideWindow { value: bad.value.as_f64(), bound: window.half_width.as_f64() });
    }
    let Some(first) = pairs.first() else {
        return Err(SpectralError::CoefficientCount { pairs: 0, coefficients: 0 });
    };
    let mut w = GridFunction::zeros(*first.vector.grid());
    let one = Complex::new(T::one(), T::zero());
    for (pair, c) in pairs.iter().zip(coefficients) {
        w = w.combine(one, &pair.vector, *c)?;
    }
    let cluster = SpectralCluster {
        h,
        width_constant,
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
        eigenfunctions: pairs.iter().map(|p| p.vector.clone()).collect(),
        coefficients: coefficients.to_vec(),
    };
    Ok((cluster, w))
}

/// Uniformly distributed unit vector in `ℂ^count`.
pub fn random_unit_coefficients<T: Real>(count: usize, seed: u64) -> Vec<Complex<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || {
        // Box–Muller
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let v: f64 = rng.random_range(0.0..1.0);
        let r = (-2.0 * u.ln()).sqrt();
        (r * (std::f64::consts::TAU * v).cos(), r * (std::f64::consts::TAU * v).sin())
    };
    let raw: Vec<(f64, f64)> = (0..count).map(|_| gauss()).collect();
    let norm = raw.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
    raw.into_iter().map(|(a, b)| Complex::new(T::lit(a / norm), T::lit(b / norm))).collect()
}
