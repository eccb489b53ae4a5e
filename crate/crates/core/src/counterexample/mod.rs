//! The log-loss example for the indefinite form `h²ξ₁ξ₂`.
//!
//! A piece is `u_{h,j}(x) = h^{1/2} f_j(x₁) g_j(x₂)` with
//! `f_j = ∫ e^{ix₁ξ₁} χ(2^j h ξ₁) dξ₁` and `g_j = ∫ e^{ix₂ξ₂} ψ(2^{−j}ξ₂) dξ₂`,
//! and the sum is `u_h = |ln h|^{−1/2} Σ u_{h,j}` over `1 ≤ 2^j ≤ 1/h` (or
//! `≤ h^{−1/2}` for the restricted variant).
//!
//! Each factor lives on its own 1D grid, a dyadic rescaling of one canonical
//! grid per profile. Since the `ξ₂` supports `[2^j, 2^{j+1}]` of different
//! pieces are disjoint, every cross term between pieces vanishes (also after
//! `∂₁∂₂` or multiplication by `x₁^a x₂^b`), and all `L²` quantities of the sum
//! are Pythagoras sums of products of 1D norms. [`brute_force_totals`] checks
//! this against an honest 2D quadrature.

mod factor;
mod oracle;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use factor::Factor;
pub use oracle::{brute_force_totals, BruteForceTotals, OracleSettings};

use crate::field::{BumpProfile, FieldError, Grid1D};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CounterexampleError {
    #[error("h = {h} must lie in (0, 1/4] so that |ln h| > 1")]
    InvalidH { h: f64 },
    #[error("piece index j = {j} violates 1 ≤ 2^j ≤ 1/h at h = {h}")]
    InvalidIndex { h: f64, j: u32 },
    #[error("frequency band [{}, {}] reaches the grid Nyquist frequency {nyquist}", band.0, band.1)]
    NyquistViolation { band: (f64, f64), nyquist: f64 },
    #[error("profile tails still above tolerance at half width {half_width}")]
    TailsUnresolved { half_width: f64 },
    #[error("brute-force grid needs {points} points, budget is {budget}")]
    OracleTooLarge { points: usize, budget: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Edge ratio (see [`Factor::edge_ratio`]) the canonical grids must reach.
pub const TAIL_TOLERANCE: f64 = 1e-9;
const START_HALF_WIDTH: f64 = 16.0;
const MAX_HALF_WIDTH: f64 = 65536.0;
/// Canonical grids use spacing 1/2, so the Nyquist frequency is 2π.
const POINTS_PER_HALF_WIDTH: usize = 4;

/// Canonical grids for the profile transforms `χ̌(y)` and `ψ̌(z)` in the
/// variables `y = x₁/(2^j h)` and `z = 2^j x₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrids<T> {
    pub chi: Grid1D<T>,
    pub psi: Grid1D<T>,
}

impl<T: Real> ProfileGrids<T> {
    /// Doubles the box from half width 16 until `χ̌, yχ̌, y²χ̌` and `ψ̌, zψ̌` all
    /// have edge ratio at most [`TAIL_TOLERANCE`].
    pub fn resolve(profiles: &BumpProfile<T>) -> Result<Self, CounterexampleError> {
        Self::resolve_with(profiles, T::lit(TAIL_TOLERANCE))
    }

    pub fn resolve_with(profiles: &BumpProfile<T>, tolerance: T) -> Result<Self, CounterexampleError> {
        let chi = resolve_axis(|t| profiles.chi(t), profiles.chi_support(), &[0, 1, 2], tolerance)?;
        let psi = resolve_axis(|z| profiles.psi(z), profiles.psi_support(), &[0, 1], tolerance)?;
        Ok(Self { chi, psi })
    }
}

fn resolve_axis<T: Real>(
    a: impl Fn(T) -> T,
    band: (T, T),
    powers: &[i32],
    tolerance: T,
) -> Result<Grid1D<T>, CounterexampleError> {
    let mut half_width = START_HALF_WIDTH;
    while half_width <= MAX_HALF_WIDTH {
        let points = POINTS_PER_HALF_WIDTH * half_width as usize;
        let grid = Grid1D::new(T::lit(half_width), points)?;
        let f = Factor::synthesize(grid, band, &a)?;
        if powers.iter().all(|&p| f.edge_ratio(p) <= tolerance) {
            return Ok(grid);
        }
        half_width *= 2.0;
    }
    Err(CounterexampleError::TailsUnresolved { half_width: MAX_HALF_WIDTH })
}

fn dyadic<T: Real>(j: u32) -> T {
    T::lit(2f64.powi(j as i32))
}

/// One piece `u_{h,j}`, held as its two 1D factors.
#[derive(Clone, Debug)]
pub struct CounterexamplePiece<T> {
    h: T,
    j: u32,
    x1: Factor<T>,
    x2: Factor<T>,
}

pub fn build_piece<T: Real>(
    h: T,
    j: u32,
    profiles: &BumpProfile<T>,
    grids: &ProfileGrids<T>,
) -> Result<CounterexamplePiece<T>, CounterexampleError> {
    if !(h > T::zero() && h <= T::one()) {
        return Err(CounterexampleError::InvalidH { h: h.as_f64() });
    }
    let scale = dyadic::<T>(j) * h;
    if scale > T::one() {
        return Err(CounterexampleError::InvalidIndex { h: h.as_f64(), j });
    }
    let two_j = dyadic::<T>(j);
    let g1 = Grid1D::new(grids.chi.half_width() * scale, grids.chi.len())?;
    let x1 = Factor::synthesize(g1, (-scale.recip(), scale.recip()), |xi| profiles.chi(scale * xi))?;
    let g2 = Grid1D::new(grids.psi.half_width() / two_j, grids.psi.len())?;
    let x2 = Factor::synthesize(g2, (two_j, two_j + two_j), |xi| profiles.psi(xi / two_j))?;
    Ok(CounterexamplePiece { h, j, x1, x2 })
}

impl<T: Real> CounterexamplePiece<T> {
    pub fn h(&self) -> T {
        self.h
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn x1(&self) -> &Factor<T> {
        &self.x1
    }

    pub fn x2(&self) -> &Factor<T> {
        &self.x2
    }

    /// `[−2^{−j}/h, 2^{−j}/h] × [2^j, 2^{j+1}]`, outside which the DFT of the
    /// piece vanishes identically.
    pub fn frequency_box(&self) -> [(T, T); 2] {
        let two_j = dyadic::<T>(self.j);
        let r = (two_j * self.h).recip();
        [(-r, r), (two_j, two_j + two_j)]
    }

    pub fn value_at_origin(&self) -> Complex<T> {
        self.x1.value_at_origin() * self.x2.value_at_origin() * self.h.sqrt()
    }

    pub fn value_at(&self, x: [T; 2]) -> Complex<T> {
        self.x1.eval(x[0]).0 * self.x2.eval(x[1]).0 * self.h.sqrt()
    }

    pub fn l2_norm(&self) -> T {
        self.moment_norm(0, 0)
    }

    /// `‖x₁^{p₁} x₂^{p₂} u‖`.
    pub fn moment_norm(&self, p1: i32, p2: i32) -> T {
        self.h.sqrt() * self.x1.moment_norm(p1, false) * self.x2.moment_norm(p2, false)
    }

    /// `‖h²∂₁∂₂u‖`.
    pub fn hyperbolic_norm(&self) -> T {
        self.h.powi(2) * self.h.sqrt() * self.x1.moment_norm(0, true) * self.x2.moment_norm(0, true)
    }

    /// `⟨h²∂₁∂₂u, x₁x₂u⟩`.
    pub fn hyperbolic_moment_product(&self) -> Complex<T> {
        self.x1.derivative_moment_product() * self.x2.derivative_moment_product() * self.h.powi(3)
    }
}

/// Which dyadic indices enter the sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumRange {
    /// `1 ≤ 2^j ≤ 1/h`.
    Full,
    /// `1 ≤ 2^j ≤ h^{−1/2}`, which keeps `x₁²u_h = O(h)`.
    Restricted,
}

impl SumRange {
    /// Largest admissible `j` at this `h`.
    pub fn max_index<T: Real>(self, h: T) -> u32 {
        let bound = match self {
            SumRange::Full => h.recip(),
            SumRange::Restricted => h.recip().sqrt(),
        };
        let mut j = 0;
        while dyadic::<T>(j + 1) <= bound {
            j += 1;
        }
        j
    }
}

/// `u_h = |ln h|^{−1/2} Σ_j u_{h,j}`.
#[derive(Clone, Debug)]
pub struct CounterexampleSum<T> {
    h: T,
    range: SumRange,
    normalization: T,
    pieces: Vec<CounterexamplePiece<T>>,
}

/// Largest relative inner product over pairs of distinct pieces, for the
/// functions themselves and their images under `∂₁∂₂`, `x₁x₂` and `x₁²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub plain: f64,
    pub hyperbolic: f64,
    pub x1x2: f64,
    pub x1_squared: f64,
}

impl OrthogonalityReport {
    fn max_with(self, o: Self) -> Self {
        Self {
            plain: self.plain.max(o.plain),
            hyperbolic: self.hyperbolic.max(o.hyperbolic),
            x1x2: self.x1x2.max(o.x1x2),
            x1_squared: self.x1_squared.max(o.x1_squared),
        }
    }
}

pub fn build_sum<T: Real>(
    h: T,
    profiles: &BumpProfile<T>,
    grids: &ProfileGrids<T>,
    range: SumRange,
) -> Result<CounterexampleSum<T>, CounterexampleError> {
    if !(h > T::zero() && h <= T::lit(0.25)) {
        return Err(CounterexampleError::InvalidH { h: h.as_f64() });
    }
    let pieces = (0..=range.max_index(h)).map(|j| build_piece(h, j, profiles, grids)).collect::<Result<Vec<_>, _>>()?;
    Ok(CounterexampleSum { h, range, normalization: h.ln().abs().sqrt().recip(), pieces })
}

impl<T: Real> CounterexampleSum<T> {
    pub fn h(&self) -> T {
        self.h
    }

    pub fn range(&self) -> SumRange {
        self.range
    }

    /// `|ln h|^{−1/2}` (natural logarithm).
    pub fn normalization(&self) -> T {
        self.normalization
    }

    pub fn pieces(&self) -> &[CounterexamplePiece<T>] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    fn pythagoras(&self, f: impl Fn(&CounterexamplePiece<T>) -> T) -> T {
        self.normalization * self.pieces.iter().map(|p| f(p).powi(2)).sum::<T>().sqrt()
    }

    pub fn value_at_origin(&self) -> Complex<T> {
        self.pieces.iter().map(|p| p.value_at_origin()).fold(Complex::zero(), |a, b| a + b) * self.normalization
    }

    /// The supremum of `|u_h|`. Both profiles are nonnegative, so
    /// `|f_j| ≤ f_j(0)` and `|g_j| ≤ g_j(0)`, and every piece peaks in phase at
    /// the origin.
    pub fn sup_norm(&self) -> T {
        self.value_at_origin().norm()
    }

    pub fn value_at(&self, x: [T; 2]) -> Complex<T> {
        self.pieces.iter().map(|p| p.value_at(x)).fold(Complex::zero(), |a, b| a + b) * self.normalization
    }

    pub fn l2_norm(&self) -> T {
        self.pythagoras(|p| p.l2_norm())
    }

    pub fn moment_norm(&self, p1: i32, p2: i32) -> T {
        self.pythagoras(|p| p.moment_norm(p1, p2))
    }

    /// `‖h²∂₁∂₂u_h‖`.
    pub fn hyperbolic_residual(&self) -> T {
        self.pythagoras(|p| p.hyperbolic_norm())
    }

    /// `(‖h²∂₁∂₂u_h + x₁x₂u_h‖, ‖h²∂₁∂₂u_h − x₁x₂u_h‖)`. Within one piece the
    /// two terms are not orthogonal, so the per-piece cross term is kept.
    pub fn kt_form_residuals(&self) -> (T, T) {
        let (mut plus, mut minus) = (T::zero(), T::zero());
        for p in &self.pieces {
            let a = p.hyperbolic_norm().powi(2) + p.moment_norm(1, 1).powi(2);
            let c = T::lit(2.0) * p.hyperbolic_moment_product().re;
            plus += a + c;
            minus += a - c;
        }
        let n = self.normalization;
        (n * plus.max(T::zero()).sqrt(), n * minus.max(T::zero()).sqrt())
    }

    /// Relative overlaps of pieces `i` and `j`.
    pub fn pair_overlaps(&self, i: usize, j: usize) -> OrthogonalityReport {
        let (a, b) = (&self.pieces[i], &self.pieces[j]);
        let (f0, fd) = a.x1.relative_overlaps(&b.x1, 0);
        let (f1, _) = a.x1.relative_overlaps(&b.x1, 1);
        let (f2, _) = a.x1.relative_overlaps(&b.x1, 2);
        let (g0, gd) = a.x2.relative_overlaps(&b.x2, 0);
        let (g1, _) = a.x2.relative_overlaps(&b.x2, 1);
        OrthogonalityReport {
            plain: (f0 * g0).as_f64(),
            hyperbolic: (fd * gd).as_f64(),
            x1x2: (f1 * g1).as_f64(),
            x1_squared: (f2 * g0).as_f64(),
        }
    }

    /// Maximum of [`Self::pair_overlaps`] over all pairs. Pieces `i` and `i + d`
    /// are exact dyadic rescalings of pieces `0` and `d` (every grid and
    /// sample scales by a power of two), so their relative overlaps agree up
    /// to rounding and one pair per distance suffices.
    pub fn orthogonality(&self) -> OrthogonalityReport {
        (1..self.pieces.len()).map(|d| self.pair_overlaps(0, d)).fold(OrthogonalityReport::default(), |a, b| a.max_with(b))
    }
}

/// The largest of the two [`CounterexampleSum::kt_form_residuals`].
pub fn kt_form_residual<T: Real>(sum: &CounterexampleSum<T>) -> T {
    let (p, m) = sum.kt_form_residuals();
    p.max(m)
}

/// Every reported quantity of one sum, in `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumSummary {
    pub range: SumRange,
    pub piece_count: usize,
    pub origin_value: f64,
    pub l2_norm: f64,
    pub hyperbolic_residual: f64,
    pub x1x2_norm: f64,
    pub x1_squared_norm: f64,
    pub kt_form_residual: f64,
    pub orthogonality: OrthogonalityReport,
}

impl SumSummary {
    pub fn of<T: Real>(sum: &CounterexampleSum<T>) -> Self {
        Self {
            range: sum.range(),
            piece_count: sum.piece_count(),
            origin_value: sum.value_at_origin().re.as_f64(),
            l2_norm: sum.l2_norm().as_f64(),
            hyperbolic_residual: sum.hyperbolic_residual().as_f64(),
            x1x2_norm: sum.moment_norm(1, 1).as_f64(),
            x1_squared_norm: sum.moment_norm(2, 0).as_f64(),
            kt_form_residual: kt_form_residual(sum).as_f64(),
            orthogonality: sum.orthogonality(),
        }
    }
}

/// Outcome of the restricted-sum checks at one `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedReport {
    pub h: f64,
    pub summary: SumSummary,
    /// `‖x₁²u_h‖ / h`.
    pub x1_squared_over_h: f64,
    /// At least `½ log₂(1/h)` pieces remain.
    pub enough_pieces: bool,
    /// `u_h(0)·h^{1/2}/|ln h|^{1/2}`.
    pub origin_over_log_law: f64,
    /// The previous ratio lies within a factor `√2` of 1.
    pub origin_within_sqrt2: bool,
}

pub fn verify_restricted_sum<T: Real>(
    h: T,
    profiles: &BumpProfile<T>,
    grids: &ProfileGrids<T>,
) -> Result<RestrictedReport, CounterexampleError> {
    let sum = build_sum(h, profiles, grids, SumRange::Restricted)?;
    let summary = SumSummary::of(&sum);
    let hf = h.as_f64();
    let ratio = summary.origin_value * hf.sqrt() / hf.ln().abs().sqrt();
    Ok(RestrictedReport {
        h: hf,
        x1_squared_over_h: summary.x1_squared_norm / hf,
        enough_pieces: summary.piece_count as f64 >= 0.5 * (1.0 / hf).log2(),
        origin_over_log_law: ratio,
        origin_within_sqrt2: ratio >= std::f64::consts::FRAC_1_SQRT_2 && ratio <= std::f64::consts::SQRT_2,
        summary,
    })
}
