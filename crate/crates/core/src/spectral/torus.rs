//! Flat torus `[−π, π]²` with `V ≡ −1`: cluster modes are the lattice points
//! `k ∈ ℤ²` with `|h²|k|² − 1| ≤ Ch`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::folded::WINDOW_SLACK;
use super::SpectralError;
use crate::field::{Grid2D, GridFunction};
use crate::operator::RadialCutoff;
use crate::scalar::Real;

/// Lattice points with `|h²|k|² − 1| ≤ Ch`, in lexicographic order.
pub fn torus_modes<T: Real>(h: T, width_constant: T) -> Vec<[i64; 2]> {
    let w = width_constant * h * (T::one() + T::lit(WINDOW_SLACK));
    let h2 = h * h;
    let lo = (T::one() - w).max(T::zero()) / h2;
    let hi = (T::one() + w) / h2;
    let kmax = hi.sqrt().floor().to_i64().unwrap_or(0);
    let mut out = Vec::new();
    for k1 in -kmax..=kmax {
        let rest = hi - T::lit((k1 * k1) as f64);
        if rest < T::zero() {
            continue;
        }
        let k2max = rest.sqrt().floor().to_i64().unwrap_or(0);
        for k2 in -k2max..=k2max {
            let r2 = T::lit((k1 * k1 + k2 * k2) as f64);
            if r2 >= lo && r2 <= hi && (h2 * r2 - T::one()).abs() <= w {
                out.push([k1, k2]);
            }
        }
    }
    out
}

/// Equal-weight, equal-phase torus cluster
/// `w = (2π)^{−1} M^{−1/2} Σ_k e^{ik·x}`, held in mode space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusCluster<T> {
    pub h: T,
    pub width_constant: T,
    pub modes: Vec<[i64; 2]>,
}

impl<T: Real> TorusCluster<T> {
    pub fn new(h: T, width_constant: T) -> Result<Self, SpectralError> {
        let modes = torus_modes(h, width_constant);
        if modes.is_empty() {
            return Err(SpectralError::EmptyCluster { h: h.as_f64() });
        }
        Ok(Self { h, width_constant, modes })
    }

    pub fn dimension(&self) -> usize {
        self.modes.len()
    }

    fn amplitude(&self) -> T {
        (T::TAU() * T::from_usize_exact(self.dimension()).sqrt()).recip()
    }

    /// `E_k = h²|k|² − 1`.
    pub fn energies(&self) -> Vec<T> {
        let h2 = self.h * self.h;
        self.modes.iter().map(|k| h2 * T::lit((k[0] * k[0] + k[1] * k[1]) as f64) - T::one()).collect()
    }

    pub fn value_at(&self, x: [T; 2]) -> Complex<T> {
        let a = self.amplitude();
        self.modes
            .iter()
            .map(|k| Complex::from_polar(a, T::lit(k[0] as f64) * x[0] + T::lit(k[1] as f64) * x[1]))
            .fold(Complex::new(T::zero(), T::zero()), |s, v| s + v)
    }

    /// `‖w‖_∞ = w(0) = M^{1/2}/(2π)`: all phases agree at the origin.
    pub fn sup_norm(&self) -> T {
        T::from_usize_exact(self.dimension()).sqrt() / T::TAU()
    }

    pub fn l2_norm(&self) -> T {
        T::one()
    }

    /// `‖(−h²Δ − 1)w‖ = (M^{−1} Σ E_k²)^{1/2}` by Parseval.
    pub fn residual_l2(&self) -> T {
        let e = self.energies();
        (e.iter().map(|v| *v * *v).sum::<T>() / T::from_usize_exact(e.len())).sqrt()
    }

    /// `‖w − χ(hD)w‖_∞`; the coefficients of `w − χ(hD)w` are nonnegative,
    /// so the supremum is the value at the origin.
    pub fn cutoff_defect(&self, chi: RadialCutoff<T>) -> T {
        let s: T = self
            .modes
            .iter()
            .map(|k| T::one() - chi.eval(self.h * T::lit((k[0] * k[0] + k[1] * k[1]) as f64).sqrt()))
            .sum();
        s * self.amplitude()
    }

    pub fn max_wavenumber(&self) -> i64 {
        self.modes.iter().map(|k| k[0].abs().max(k[1].abs())).max().unwrap_or(0)
    }

    /// Samples on `[−π, π]²` with `n` points per side via one inverse FFT.
    pub fn synthesize(&self, n: usize) -> Result<GridFunction<T>, SpectralError> {
        let grid = Grid2D::new(T::PI(), n)?;
        let axis = *grid.axis();
        let mut spec = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        // e^{ik·x_j} = (−1)^{k₁+k₂} e^{2πi k·j/N} on x_j = −π + 2πj/N
        let a = self.amplitude() * T::from_usize_exact(grid.len());
        for k in &self.modes {
            let (Some(b1), Some(b2)) = (axis.bin_of(k[0]), axis.bin_of(k[1])) else {
                return Err(SpectralError::NyquistViolation { wavenumber: self.max_wavenumber(), points: n });
            };
            let sign = if (k[0] + k[1]).rem_euclid(2) == 0 { T::one() } else { -T::one() };
            spec[grid.index(b1, b2)] += Complex::new(sign * a, T::zero());
        }
        Ok(GridFunction::from_spectrum(grid, spec)?)
    }
}

/// The coherent cluster sampled on `[−π, π]²` with `n` points per side,
/// `‖w‖_{L²} = 1`. Errors on an empty annulus or insufficient resolution.
pub fn coherent_torus_cluster<T: Real>(h: T, width_constant: T, n: usize) -> Result<GridFunction<T>, SpectralError> {
    TorusCluster::new(h, width_constant)?.synthesize(n)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::{l2_norm, sup_norm};

    fn brute_force(h: f64, c: f64) -> Vec<[i64; 2]> {
        let mut out = Vec::new();
        for k1 in -100i64..=100 {
            for k2 in -100i64..=100 {
                let e = h * h * (k1 * k1 + k2 * k2) as f64 - 1.0;
                if e.abs() <= c * h * (1.0 + 1e-9) {
                    out.push([k1, k2]);
                }
            }
        }
        out
    }

    #[test]
    fn modes_match_enumeration() {
        for (h, c) in [(0.25f64, 1.0f64), (0.125, 1.0), (1.0 / 16.0, 0.5), (0.1, 2.0)] {
            assert_eq!(torus_modes(h, c), brute_force(h, c), "h={h}");
        }
        // |k|² ∈ {13, 16, 17, 18, 20}
        assert_eq!(torus_modes(0.25, 1.0).len(), 32);
    }

    #[test]
    fn synthesized_cluster_norms() {
        let tc = TorusCluster::new(0.125f64, 1.0).unwrap();
        let w = tc.synthesize(64).unwrap();
        assert!((l2_norm(&w) - 1.0).abs() < 1e-12);
        let origin = w.value_at_origin();
        assert!((origin.re * 2.0 * PI - (tc.dimension() as f64).sqrt()).abs() < 1e-10);
        assert!(origin.im.abs() < 1e-12);
        assert!((sup_norm(&w) - tc.sup_norm()).abs() < 1e-10);
        let x = [0.3, -1.1];
        let direct = tc.value_at(x);
        // grid point nearest to x is not x; compare at an exact node instead
        let node = w.grid().point(40, 17);
        assert!((tc.value_at(node) - w.at(40, 17)).norm() < 1e-12);
        assert!(direct.norm() <= tc.sup_norm() + 1e-12);
    }

    #[test]
    fn nyquist_and_empty_errors() {
        assert!(matches!(coherent_torus_cluster(0.125, 1.0, 16), Err(SpectralError::NyquistViolation { .. })));
        // between 1/h² = 4 ± 0.0025·... no lattice point: h = 0.49, |k|² ≈ 4.16
        assert!(matches!(TorusCluster::new(0.49, 0.01), Err(SpectralError::EmptyCluster { .. })));
    }

    #[test]
    fn parseval_residual_matches_operator() {
        use crate::field::{MetricField, PotentialField};
        use crate::operator::{assemble, residual, Backend};
        let tc = TorusCluster::new(0.125f64, 1.0).unwrap();
        let w = tc.synthesize(64).unwrap();
        let p = assemble(0.125, &MetricField::identity(), &PotentialField::constant(-1.0), *w.grid(), Backend::Spectral).unwrap();
        let (res, _) = residual(&p, &w).unwrap();
        assert!((res - tc.residual_l2()).abs() < 1e-12);
        assert!(res <= 0.125);
    }
}
