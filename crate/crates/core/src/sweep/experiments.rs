//! Builders for one scaling record at a given `h`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex;

use super::{ScalingRecord, SweepConfig};
use crate::counterexample::{build_sum, kt_form_residual, ProfileGrids};
use crate::field::smooth::Polynomial2;
use crate::field::{l2_norm, sup_norm, BumpProfile, Grid2D, GridFunction, MetricField, PotentialField};
use crate::operator::{assemble, cutoff_defect, residual, Backend, RadialCutoff, SemiclassicalOperator};
use crate::spectral::{interior_eigenpairs, EigenOptions, EnergyWindow, TorusCluster};

type BuildResult = Result<ScalingRecord, Box<dyn std::error::Error + Send + Sync>>;

/// Box half width for the oscillator is `(80h)^{1/2}`, where the Gaussian
/// ground state has decayed to `e^{−40}`.
const HARMONIC_BOX: f64 = 80.0;
const HARMONIC_POINTS: usize = 256;
/// Elliptic potential `−1 + ELLIPTIC_CURVATURE·|x|²`.
pub const ELLIPTIC_CURVATURE: f64 = 0.004;
/// Box half width `9 + 12h`.
const ELLIPTIC_BOX: f64 = 9.0;
const ELLIPTIC_BOX_SLOPE: f64 = 12.0;
/// Largest `|hξ|` resolved by the elliptic grids.
const ELLIPTIC_BAND: f64 = 1.3;
/// Zero-crossing potential `x₁ + ZERO_CROSSING_CURVATURE·|x|²`.
pub const ZERO_CROSSING_CURVATURE: f64 = 1e-4;
/// Box half width `10 + 16h`: the nonstationary tails decay more slowly
/// for larger `h`.
const ZERO_CROSSING_BOX: f64 = 10.0;
const ZERO_CROSSING_BOX_SLOPE: f64 = 16.0;
const ZERO_CROSSING_BAND: f64 = 2.35;
/// The `ζ₁` window is `χ(ζ₁/ZERO_CROSSING_WINDOW)`; wider windows lower
/// `‖b′‖/‖b‖` and with it the residual.
const ZERO_CROSSING_WINDOW: f64 = 2.25;
/// Share of `|u|²` beyond 7/8 of the half width that still counts as
/// decayed.
const EDGE_FRACTION: f64 = 1e-8;

fn extra(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Smallest power of two with Nyquist frequency at least `band / h` on a box
/// of half width `half_width`.
fn band_resolution(half_width: f64, band: f64, h: f64) -> usize {
    let need = (2.0 * half_width * band / (PI * h)).ceil() as usize;
    need.max(16).next_power_of_two()
}

fn edge_fraction(u: &GridFunction<f64>) -> f64 {
    let cut = 0.875 * u.grid().half_width();
    let grid = *u.grid();
    let (mut edge, mut total) = (0.0, 0.0);
    for (k, v) in u.values().iter().enumerate() {
        let x = grid.point_of(k);
        let m = v.norm_sqr();
        total += m;
        if x[0].abs().max(x[1].abs()) >= cut {
            edge += m;
        }
    }
    edge / total
}

pub(super) fn torus_cluster(h: f64, cfg: &SweepConfig) -> BuildResult {
    let cluster = TorusCluster::new(h, cfg.width_constant)?;
    let sup = cluster.sup_norm();
    Ok(ScalingRecord {
        extra: extra(&[
            ("cluster_dim", cluster.dimension() as f64),
            ("origin_value", sup),
            ("cutoff_defect", cluster.cutoff_defect(RadialCutoff::default())),
        ]),
        ..ScalingRecord::new(h, cluster.l2_norm(), sup, cluster.residual_l2())
    })
}

pub(super) fn harmonic_ground(h: f64, cfg: &SweepConfig) -> BuildResult {
    let grid = Grid2D::new((HARMONIC_BOX * h).sqrt(), cfg.grid.unwrap_or(HARMONIC_POINTS))?;
    let v = PotentialField::from_field(Polynomial2::from_terms(&[(2, 0, 1.0), (0, 2, 1.0), (0, 0, -2.0 * h)]));
    let p = assemble(h, &MetricField::identity(), &v, grid, Backend::Spectral)?;
    let pairs = interior_eigenpairs(&p, EnergyWindow::cluster(cfg.width_constant, h), 16, &EigenOptions::default())?;
    let ground = pairs
        .iter()
        .min_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
        .ok_or("no eigenvalue in the window")?;
    let u = &ground.vector;
    let (res, norm) = residual(&p, u)?;
    let sup = sup_norm(u);
    Ok(ScalingRecord {
        extra: extra(&[
            ("cluster_dim", pairs.len() as f64),
            ("eigenvalue", ground.value + 2.0 * h),
            ("origin_value", u.value_at_origin().norm()),
            ("saturation", sup * (PI * h).sqrt()),
        ]),
        ..ScalingRecord::new(h, norm, sup, res)
    })
}

/// `exp(−P²/(2σ²))v` by a Chebyshev expansion on the spectral interval.
/// Returns the filtered vector and the degree used.
fn gaussian_filter(p: &SemiclassicalOperator<f64>, v: &[f64], sigma: f64) -> (Vec<f64>, usize) {
    let (lo, hi) = p.spectrum_bounds();
    let center = 0.5 * (hi + lo);
    let radius = 0.5 * (hi - lo) * 1.01;
    // coefficients of e^{−a²t²/2} fall off like e^{−n²/(2a²)}
    let degree = (8.0 * radius / sigma).ceil() as usize + 8;
    let nodes = 2 * degree;
    let f = |e: f64| (-(e * e) / (2.0 * sigma * sigma)).exp();
    let coeffs: Vec<f64> = (0..=degree)
        .map(|n| {
            let s: f64 = (0..nodes)
                .map(|k| {
                    let theta = PI * (k as f64 + 0.5) / nodes as f64;
                    f(center + radius * theta.cos()) * (n as f64 * theta).cos()
                })
                .sum();
            s * if n == 0 { 1.0 } else { 2.0 } / nodes as f64
        })
        .collect();
    let len = v.len();
    let mut pv = vec![0.0; len];
    let mut scaled = |x: &[f64], out: &mut [f64]| {
        p.apply_real(x, &mut pv);
        for ((o, a), b) in out.iter_mut().zip(&pv).zip(x) {
            *o = (a - center * b) / radius;
        }
    };
    let mut prev = v.to_vec();
    let mut cur = vec![0.0; len];
    scaled(&prev, &mut cur);
    let mut out: Vec<f64> = prev.iter().zip(&cur).map(|(a, b)| coeffs[0] * a + coeffs[1] * b).collect();
    let mut next = vec![0.0; len];
    for c in &coeffs[2..] {
        scaled(&cur, &mut next);
        for ((n, p), o) in next.iter_mut().zip(&prev).zip(out.iter_mut()) {
            *n = 2.0 * *n - p;
            *o += c * *n;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    (out, degree)
}

/// Point-focused quasimode for `−h²Δ − 1 + c|x|²`: a discrete delta at the
/// origin filtered by `exp(−P²/(2h²))`. The filter keeps energies within a
/// few `h` of zero, so `‖Pu‖ ≈ h/√2` and `u(0)` is as large as a weak
/// quasimode allows.
pub(super) fn elliptic(h: f64, cfg: &SweepConfig) -> BuildResult {
    let half_width = ELLIPTIC_BOX + ELLIPTIC_BOX_SLOPE * h;
    let n = cfg.grid.unwrap_or_else(|| band_resolution(half_width, ELLIPTIC_BAND, h));
    let grid = Grid2D::new(half_width, n)?;
    let v = PotentialField::from_field(Polynomial2::from_terms(&[
        (2, 0, ELLIPTIC_CURVATURE),
        (0, 2, ELLIPTIC_CURVATURE),
        (0, 0, -1.0),
    ]));
    let p = assemble(h, &MetricField::identity(), &v, grid, Backend::Spectral)?;
    let mut delta = vec![0.0; grid.len()];
    delta[grid.origin_index()] = 1.0;
    let (w, degree) = gaussian_filter(&p, &delta, h);
    let raw = GridFunction::from_real(grid, &w)?;
    let u = raw.scaled(Complex::new(l2_norm(&raw).recip(), 0.0));
    let (res, norm) = residual(&p, &u)?;
    let edge = edge_fraction(&u);
    if edge > EDGE_FRACTION {
        return Err(format!("quasimode reaches the box edge (edge fraction {edge:e})").into());
    }
    Ok(ScalingRecord {
        extra: extra(&[
            ("origin_value", u.value_at_origin().norm()),
            ("edge_fraction", edge),
            ("filter_degree", degree as f64),
            ("cutoff_defect", cutoff_defect(&u, h, RadialCutoff::default())),
        ]),
        ..ScalingRecord::new(h, norm, sup_norm(&u), res)
    })
}

/// Quasimode for `−h²Δ + x₁` built in frequency space. With `ζ = hξ`,
/// `û(ξ) = b(ζ₁) a(ζ₂) exp(i(ζ₁³/3 + ζ₁ζ₂²)/h)` solves the equation except
/// for the term `ih b′(ζ₁)a(ζ₂)·phase`, so `‖Pu‖ = h‖b′‖/‖b‖` for `V = x₁`.
/// The small curvature in `V` adds a few `10⁻⁴` to the residual.
pub(super) fn zero_crossing(h: f64, cfg: &SweepConfig) -> BuildResult {
    let half_width = ZERO_CROSSING_BOX + ZERO_CROSSING_BOX_SLOPE * h;
    let n = cfg.grid.unwrap_or_else(|| band_resolution(half_width, ZERO_CROSSING_BAND, h));
    let grid = Grid2D::new(half_width, n)?;
    let axis = *grid.axis();
    let bump = BumpProfile::<f64>::new();
    let mut spec = vec![Complex::new(0.0, 0.0); grid.len()];
    for m1 in 0..n {
        let z1 = h * axis.frequency(m1);
        let b = bump.chi(z1 / ZERO_CROSSING_WINDOW);
        if b == 0.0 {
            continue;
        }
        for m2 in 0..n {
            let z2 = h * axis.frequency(m2);
            let a = bump.chi(z2);
            if a == 0.0 {
                continue;
            }
            let phase = (z1 * z1 * z1 / 3.0 + z1 * z2 * z2) / h;
            // x_0 = −L carries the factor (−1)^{k₁+k₂}
            let sign = if (axis.wavenumber_index(m1) + axis.wavenumber_index(m2)).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            spec[grid.index(m1, m2)] = Complex::from_polar(sign * a * b, phase);
        }
    }
    let raw = GridFunction::from_spectrum(grid, spec)?;
    let u = raw.scaled(Complex::new(l2_norm(&raw).recip(), 0.0));
    let v = PotentialField::from_field(Polynomial2::from_terms(&[
        (1, 0, 1.0),
        (2, 0, ZERO_CROSSING_CURVATURE),
        (0, 2, ZERO_CROSSING_CURVATURE),
    ]));
    let p = assemble(h, &MetricField::identity(), &v, grid, Backend::Spectral)?;
    let (res, norm) = residual(&p, &u)?;
    let edge = edge_fraction(&u);
    if edge > EDGE_FRACTION {
        return Err(format!("quasimode reaches the box edge (edge fraction {edge:e})").into());
    }
    Ok(ScalingRecord {
        extra: extra(&[("origin_value", u.value_at_origin().norm()), ("edge_fraction", edge)]),
        ..ScalingRecord::new(h, norm, sup_norm(&u), res)
    })
}

/// The log-loss sum for `h²∂₁∂₂`, by the tensor path. `|u_h|` peaks at the
/// origin because both profiles are nonnegative.
pub(super) fn hyperbolic_counterexample(h: f64, cfg: &SweepConfig) -> BuildResult {
    let profiles = BumpProfile::new();
    let grids = ProfileGrids::resolve(&profiles)?;
    let sum = build_sum(h, &profiles, &grids, cfg.sum_range)?;
    let origin = sum.value_at_origin().norm();
    let hyperbolic = sum.hyperbolic_residual();
    Ok(ScalingRecord {
        extra: extra(&[
            ("origin_value", origin),
            ("piece_count", sum.piece_count() as f64),
            ("x1x2_norm", sum.moment_norm(1, 1)),
            ("x1_squared_norm", sum.moment_norm(2, 0)),
            ("kt_form_residual", kt_form_residual(&sum)),
        ]),
        ..ScalingRecord::new(h, sum.l2_norm(), origin, hyperbolic)
    })
}
