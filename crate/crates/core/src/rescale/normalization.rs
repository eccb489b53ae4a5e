use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RescaleError;
use crate::field::{MetricField, PotentialField};
use crate::scalar::Real;

pub const COND1_TOLERANCE: f64 = 1e-10;
/// `sup |V| + |dV| ≤ 2` on `B*`.
pub const COND2_FIRST_BOUND: f64 = 2.0;
/// `sup |d²V| + Σ|dg^{ij}| ≤ 0.01` on `B*`.
pub const COND2_SECOND_BOUND: f64 = 0.01;
pub const SAMPLE_SPACING: f64 = 0.01;
pub const MAX_DERIVATIVE_ORDER: usize = 8;
const B_STAR_RADIUS: f64 = 2.0;
const BISECTION_STEPS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub cond1_ok: bool,
    /// `max |g^{ij}(0) − δ^{ij}|`.
    pub cond1_defect: f64,
    /// `(sup |V| + |dV|, sup |d²V| + Σ|dg^{ij}|)` over the sampled `B*`.
    pub cond2_values: (f64, f64),
    pub cond2_ok: bool,
    /// `C_N` for `N = 0, 1, …`. Shorter than `MAX_DERIVATIVE_ORDER + 1` when
    /// a field does not provide higher derivatives.
    pub cond3_constants: Vec<f64>,
    /// Largest `c` (to bisection accuracy) for which `cV(cx)`, `g(cx)` pass
    /// the second condition; only set when it fails.
    pub suggested_c: Option<f64>,
    pub samples: usize,
}

impl NormalizationReport {
    pub fn passes(&self) -> bool {
        self.cond1_ok && self.cond2_ok
    }
}

fn b_star_samples<T: Real>() -> Vec<[T; 2]> {
    let steps = (B_STAR_RADIUS / SAMPLE_SPACING).round() as i64;
    let mut out = Vec::new();
    for i in -steps..=steps {
        for j in -steps..=steps {
            let x = [i as f64 * SAMPLE_SPACING, j as f64 * SAMPLE_SPACING];
            if x[0].hypot(x[1]) < B_STAR_RADIUS {
                out.push([T::lit(x[0]), T::lit(x[1])]);
            }
        }
    }
    out
}

const ENTRIES: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

fn norm2<T: Real>(v: [T; 2]) -> T {
    v[0].hypot(v[1])
}

/// Spectral norm of a symmetric 2×2 matrix.
fn sym_norm<T: Real>(m: [[T; 2]; 2]) -> T {
    let half = T::lit(0.5);
    let mean = half * (m[0][0] + m[1][1]);
    let dev = (half * (m[0][0] - m[1][1])).hypot(m[0][1]);
    mean.abs() + dev
}

/// The two suprema of the second condition over the given points.
pub fn cond2_values<T: Real>(metric: &MetricField<T>, potential: &PotentialField<T>, points: &[[T; 2]]) -> (f64, f64) {
    points
        .par_iter()
        .map(|&x| {
            let first = potential.v(x).abs() + norm2(potential.grad_v(x));
            let dg: T = ENTRIES.iter().map(|&(i, j)| norm2(metric.entry(i, j).gradient(x))).sum();
            (first.as_f64(), (sym_norm(potential.hess_v(x)) + dg).as_f64())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

fn passes_cond2(values: (f64, f64)) -> bool {
    values.0 <= COND2_FIRST_BOUND && values.1 <= COND2_SECOND_BOUND
}

/// Per-order suprema `sup_x max_{|α| = k} (|∂^αV| + Σ|∂^αg^{ij}|)`.
fn order_suprema<T: Real>(metric: &MetricField<T>, potential: &PotentialField<T>, points: &[[T; 2]]) -> Vec<f64> {
    let per_point = |x: [T; 2]| -> Vec<f64> {
        let mut out = Vec::new();
        'orders: for k in 0..=MAX_DERIVATIVE_ORDER {
            let mut best = T::zero();
            for a in 0..=k {
                let alpha = [a, k - a];
                let Some(v) = potential.partial(alpha, x) else { break 'orders };
                let mut s = v.abs();
                for &(i, j) in &ENTRIES {
                    let Some(g) = metric.entry(i, j).partial(alpha, x) else { break 'orders };
                    s += g.abs();
                }
                best = best.max(s);
            }
            out.push(best.as_f64());
        }
        out
    };
    points.par_iter().map(|&x| per_point(x)).reduce(Vec::new, |a, b| {
        let n = a.len().min(b.len());
        if a.is_empty() {
            return b;
        }
        if b.is_empty() {
            return a;
        }
        (0..n).map(|k| a[k].max(b[k])).collect()
    })
}

/// Checks the three normalization conditions on a grid of `B* = {|x| < 2}`
/// with spacing 0.01.
pub fn verify_normalization<T: Real>(metric: &MetricField<T>, potential: &PotentialField<T>) -> NormalizationReport {
    let points = b_star_samples::<T>();
    let origin = [T::zero(); 2];
    let g0 = metric.inverse_metric(origin);
    let mut cond1_defect = 0.0f64;
    for (i, row) in g0.iter().enumerate() {
        for (j, &gij) in row.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            cond1_defect = cond1_defect.max((gij.as_f64() - delta).abs());
        }
    }
    let cond2 = cond2_values(metric, potential, &points);
    let cond2_ok = passes_cond2(cond2);
    let mut cond3_constants = order_suprema(metric, potential, &points);
    for k in 1..cond3_constants.len() {
        cond3_constants[k] = cond3_constants[k].max(cond3_constants[k - 1]);
    }
    let suggested_c = (!cond2_ok).then(|| suggest_c(metric, potential, &points));
    NormalizationReport {
        cond1_ok: cond1_defect <= COND1_TOLERANCE,
        cond1_defect,
        cond2_values: cond2,
        cond2_ok,
        cond3_constants,
        suggested_c,
        samples: points.len(),
    }
}

/// Bisection in `ln c`; both suprema are increasing in `c`.
fn suggest_c<T: Real>(metric: &MetricField<T>, potential: &PotentialField<T>, points: &[[T; 2]]) -> f64 {
    let ok = |c: f64| {
        let f = rescale_to_normalization(metric, potential, T::lit(c)).expect("c in (0, 1]");
        passes_cond2(cond2_values(&f.metric, &f.potential, points))
    };
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    if !ok(lo.exp()) {
        return lo.exp();
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if ok(mid.exp()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

/// `V'(x) = cV(cx)`, `g'(x) = g(cx)`.
#[derive(Clone, Debug)]
pub struct NormalizedFields<T: Real> {
    pub metric: MetricField<T>,
    pub potential: PotentialField<T>,
    pub c: T,
    /// If `u` solves the problem at `h`, then `c·u(cx)` solves the new one at
    /// `h·c^{−1/2}` with the same residual norm.
    pub h_multiplier: T,
}

pub fn rescale_to_normalization<T: Real>(
    metric: &MetricField<T>,
    potential: &PotentialField<T>,
    c: T,
) -> Result<NormalizedFields<T>, RescaleError> {
    if !(c > T::zero() && c <= T::one()) {
        return Err(RescaleError::InvalidScale(c.as_f64()));
    }
    let m = [[c, T::zero()], [T::zero(), c]];
    Ok(NormalizedFields {
        metric: metric.pulled_back(m, [T::zero(); 2]),
        potential: potential.scaled(c, c),
        c,
        h_multiplier: c.sqrt().recip(),
    })
}
