use serde::{Deserialize, Serialize};

use super::FieldError;
use crate::scalar::Real;

/// Uniform periodic 1D grid on `[−L, L)` with `n` points, `x_i = −L + i·dx`.
///
/// The origin is the sample with index `n / 2`. Frequencies follow FFT order
/// with spacing `Δξ = π / L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D<T> {
    half_width: T,
    points: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(half_width: T, points: usize) -> Result<Self, FieldError> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(FieldError::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!("point count must be a power of two ≥ 2, got {points}")));
        }
        Ok(Self { half_width, points })
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        // exact: `points` is a power of two
        (self.half_width + self.half_width) / T::from_usize_exact(self.points)
    }

    pub fn coord(&self, i: usize) -> T {
        -self.half_width + T::from_usize_exact(i) * self.spacing()
    }

    pub fn origin_index(&self) -> usize {
        self.points / 2
    }

    /// Signed integer frequency index of FFT bin `m`.
    pub fn wavenumber_index(&self, m: usize) -> i64 {
        if m < self.points / 2 {
            m as i64
        } else {
            m as i64 - self.points as i64
        }
    }

    /// FFT bin holding signed frequency index `k`, if representable.
    pub fn bin_of(&self, k: i64) -> Option<usize> {
        let half = (self.points / 2) as i64;
        if k >= -half && k < half {
            Some(if k >= 0 { k as usize } else { (k + self.points as i64) as usize })
        } else {
            None
        }
    }

    pub fn frequency_step(&self) -> T {
        T::PI() / self.half_width
    }

    /// Angular frequency of FFT bin `m`.
    pub fn frequency(&self, m: usize) -> T {
        T::lit(self.wavenumber_index(m) as f64) * self.frequency_step()
    }

    /// Largest representable |ξ| (the Nyquist frequency).
    pub fn nyquist(&self) -> T {
        T::from_usize_exact(self.points / 2) * self.frequency_step()
    }

    /// Same box, twice the points.
    pub fn refined(&self) -> Self {
        Self { half_width: self.half_width, points: self.points * 2 }
    }
}

/// Square periodic grid `[−L, L)²`, row-major with `x₁` the slow index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D<T> {
    axis: Grid1D<T>,
}

impl<T: Real> Grid2D<T> {
    pub fn new(half_width: T, points_per_dim: usize) -> Result<Self, FieldError> {
        Ok(Self { axis: Grid1D::new(half_width, points_per_dim)? })
    }

    pub fn from_axis(axis: Grid1D<T>) -> Self {
        Self { axis }
    }

    pub fn axis(&self) -> &Grid1D<T> {
        &self.axis
    }

    pub fn half_width(&self) -> T {
        self.axis.half_width()
    }

    pub fn points_per_dim(&self) -> usize {
        self.axis.len()
    }

    pub fn spacing(&self) -> T {
        self.axis.spacing()
    }

    pub fn cell_area(&self) -> T {
        let dx = self.spacing();
        dx * dx
    }

    pub fn len(&self) -> usize {
        self.axis.len() * self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.axis.len() + i2
    }

    pub fn point(&self, i1: usize, i2: usize) -> [T; 2] {
        [self.axis.coord(i1), self.axis.coord(i2)]
    }

    pub fn point_of(&self, flat: usize) -> [T; 2] {
        let n = self.axis.len();
        self.point(flat / n, flat % n)
    }

    pub fn origin_index(&self) -> usize {
        let c = self.axis.origin_index();
        self.index(c, c)
    }

    pub fn frequency(&self, m1: usize, m2: usize) -> [T; 2] {
        [self.axis.frequency(m1), self.axis.frequency(m2)]
    }

    pub fn refined(&self) -> Self {
        Self { axis: self.axis.refined() }
    }

    /// Smallest power-of-two resolution meeting the finite-difference rule of
    /// at least 16 points per unit of `width / h`.
    pub fn fd_resolution(width: T, h: T) -> usize {
        let need = (T::lit(16.0) * width / h).ceil().to_usize().unwrap_or(usize::MAX);
        need.max(2).next_power_of_two()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_points_is_box_width() {
        for &(l, n) in &[(1.0, 8usize), (3.7, 64), (std::f64::consts::PI, 256)] {
            let g = Grid1D::new(l, n).unwrap();
            assert_eq!(g.spacing() * n as f64, 2.0 * l);
            assert_eq!(g.coord(g.origin_index()), 0.0);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid1D::new(1.0f64, 12).is_err());
        assert!(Grid1D::new(0.0f64, 16).is_err());
        assert!(Grid2D::new(1.0f32, 1).is_err());
    }

    #[test]
    fn frequency_bins_roundtrip() {
        let g = Grid1D::new(std::f64::consts::PI, 16).unwrap();
        for m in 0..16 {
            let k = g.wavenumber_index(m);
            assert_eq!(g.bin_of(k), Some(m));
            assert!((g.frequency(m) - k as f64).abs() < 1e-14);
        }
        assert_eq!(g.bin_of(8), None);
        assert_eq!(g.bin_of(-8), Some(8));
    }

    #[test]
    fn fd_resolution_rule() {
        assert_eq!(Grid2D::<f64>::fd_resolution(2.0, 0.25), 128);
    }
}
