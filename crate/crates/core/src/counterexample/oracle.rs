//! Brute-force 2D quadrature of `u_h`, with every cross term included.
//!
//! The sum is evaluated pointwise on a tensor grid of composite
//! Gauss–Legendre panels, each piece by direct summation of its lattice
//! series. Panel breakpoints sit at every factor's box edge, where that
//! factor is cut off, and panels are short enough for the local bandwidth.
//! Uniform grids are out of reach: at `h = 2^{−8}` they would need ~10¹⁰ points.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use super::{CounterexampleError, CounterexampleSum, Factor};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct OracleSettings {
    pub nodes_per_panel: usize,
    /// Panel length is `phase / K` for local bandwidth `K`. The integrands
    /// carry `e^{±2iKx}`, so this is the half-phase swept per panel.
    pub phase_per_panel: f64,
    pub max_points: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { nodes_per_panel: 32, phase_per_panel: 28.0, max_points: 1 << 29 }
    }
}

/// Totals from the 2D quadrature, named as in
/// [`super::SumSummary`].
#[derive(Clone, Copy, Debug)]
pub struct BruteForceTotals<T> {
    pub origin_value: Complex<T>,
    pub l2_norm: T,
    pub hyperbolic_residual: T,
    pub x1x2_norm: T,
    pub x1_squared_norm: T,
    pub kt_plus: T,
    pub kt_minus: T,
    pub points: usize,
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Quadrature nodes for one axis with each factor's samples, zero outside
/// that factor's box.
struct Axis<T> {
    nodes: Vec<(T, T)>,
    /// `values[node * pieces + j] = (f_j, f_j′)`.
    values: Vec<(Complex<T>, Complex<T>)>,
    /// Range of pieces that are nonzero at each node.
    active: Vec<(usize, usize)>,
}

fn band<T: Real>(f: &Factor<T>) -> T {
    f.spectrum().iter().map(|(xi, _)| xi.abs()).fold(T::zero(), T::max)
}

fn build_axis<T: Real>(factors: &[&Factor<T>], settings: &OracleSettings) -> Axis<T> {
    let rule = gauss_legendre(settings.nodes_per_panel);
    let boxes: Vec<T> = factors.iter().map(|f| f.grid().half_width()).collect();
    let bands: Vec<T> = factors.iter().map(|f| band(f)).collect();
    let mut breaks = boxes.clone();
    breaks.push(T::zero());
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut half = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let k = (0..factors.len()).filter(|&j| boxes[j] >= b).map(|j| bands[j]).fold(T::zero(), T::max);
        let panels = ((b - a) * k / T::lit(settings.phase_per_panel)).ceil().to_usize().unwrap_or(1).max(1);
        let len = (b - a) / T::from_usize_exact(panels);
        for p in 0..panels {
            let mid = a + len * (T::from_usize_exact(p) + T::lit(0.5));
            for &(t, w) in &rule {
                half.push((mid + len * T::lit(0.5 * t), len * T::lit(0.5 * w)));
            }
        }
    }
    let mut nodes: Vec<(T, T)> = half.iter().map(|&(x, w)| (-x, w)).rev().collect();
    nodes.extend(half);
    let pieces = factors.len();
    let per_node: Vec<(Vec<(Complex<T>, Complex<T>)>, (usize, usize))> = nodes
        .par_iter()
        .map(|&(x, _)| {
            let mut row = vec![(Complex::zero(), Complex::zero()); pieces];
            let (mut lo, mut hi) = (pieces, 0);
            for j in 0..pieces {
                if x.abs() <= boxes[j] {
                    row[j] = factors[j].eval(x);
                    lo = lo.min(j);
                    hi = hi.max(j + 1);
                }
            }
            (row, (lo, hi))
        })
        .collect();
    let mut values = Vec::with_capacity(nodes.len() * pieces);
    let mut active = Vec::with_capacity(nodes.len());
    for (row, range) in per_node {
        values.extend(row);
        active.push(range);
    }
    Axis { nodes, values, active }
}

pub fn brute_force_totals<T: Real>(
    sum: &CounterexampleSum<T>,
    settings: &OracleSettings,
) -> Result<BruteForceTotals<T>, CounterexampleError> {
    let pieces = sum.pieces();
    let n = pieces.len();
    let a1 = build_axis(&pieces.iter().map(|p| p.x1()).collect::<Vec<_>>(), settings);
    let a2 = build_axis(&pieces.iter().map(|p| p.x2()).collect::<Vec<_>>(), settings);
    let points = a1.nodes.len() * a2.nodes.len();
    if points > settings.max_points {
        return Err(CounterexampleError::OracleTooLarge { points, budget: settings.max_points });
    }

    // [|u|², |∂₁∂₂u|², x₁²x₂²|u|², x₁⁴|u|², Re⟨∂₁∂₂u, x₁x₂u⟩] before scaling
    let rows: Vec<[T; 5]> = (0..a2.nodes.len())
        .into_par_iter()
        .map(|i2| {
            let (x2, w2) = a2.nodes[i2];
            let (lo2, hi2) = a2.active[i2];
            let g = &a2.values[i2 * n..(i2 + 1) * n];
            let mut acc = [T::zero(); 5];
            for (i1, &(x1, w1)) in a1.nodes.iter().enumerate() {
                let (lo1, hi1) = a1.active[i1];
                let (lo, hi) = (lo1.max(lo2), hi1.min(hi2));
                if lo >= hi {
                    continue;
                }
                let f = &a1.values[i1 * n..(i1 + 1) * n];
                let (mut u, mut d) = (Complex::zero(), Complex::zero());
                for j in lo..hi {
                    u += f[j].0 * g[j].0;
                    d += f[j].1 * g[j].1;
                }
                let uu = u.norm_sqr();
                let m = x1 * x2;
                acc[0] += w1 * uu;
                acc[1] += w1 * d.norm_sqr();
                acc[2] += w1 * m * m * uu;
                acc[3] += w1 * x1.powi(4) * uu;
                acc[4] += w1 * m * (d.conj() * u).re;
            }
            acc.map(|a| a * w2)
        })
        .collect();
    let mut s = [T::zero(); 5];
    for r in rows {
        for k in 0..5 {
            s[k] += r[k];
        }
    }

    let h = sum.h();
    let scale = sum.normalization() * h.sqrt();
    let h2 = h * h;
    let kt = |sign: T| {
        let v = h2 * h2 * s[1] + s[2] + sign * T::lit(2.0) * h2 * s[4];
        scale * v.max(T::zero()).sqrt()
    };
    let origin = pieces.iter().fold(Complex::zero(), |acc, p| acc + p.x1().eval(T::zero()).0 * p.x2().eval(T::zero()).0);
    Ok(BruteForceTotals {
        origin_value: origin * scale,
        l2_norm: scale * s[0].sqrt(),
        hyperbolic_residual: scale * h2 * s[1].sqrt(),
        x1x2_norm: scale * s[2].sqrt(),
        x1_squared_norm: scale * s[3].sqrt(),
        kt_plus: kt(T::one()),
        kt_minus: kt(-T::one()),
        points,
    })
}
