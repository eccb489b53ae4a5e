use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RescaleError;
use crate::field::{weighted_norm, Grid2D, GridFunction, MetricField, PotentialField};
use crate::operator::{assemble, Backend};
use crate::scalar::Real;

/// How a grid function is evaluated off its own grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampling {
    /// Band-limited when the samples look periodic and band-limited,
    /// cubic otherwise.
    #[default]
    Auto,
    /// Zero-padded FFT onto a 4× finer grid, then local cubic interpolation.
    BandLimited,
    /// Local cubic Lagrange interpolation on the source grid.
    Cubic,
}

const PAD: usize = 4;
/// Relative size of edge samples and high-frequency content below which a
/// function counts as periodic and band-limited.
const PERIODIC_TOLERANCE: f64 = 1e-8;

/// Which interpolation was used and its formal accuracy, `O(spacing^order)`
/// in the values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResampleRecord {
    pub method: Resampling,
    pub spacing: f64,
    pub order: u32,
}

/// Output of a rescaling map. New coordinates `x` and old ones `y` are related
/// by `y = scale·R·x + shift`.
#[derive(Clone, Debug)]
pub struct Rescaled<T: Real> {
    /// `scale · u(scale·R·x + shift)`.
    pub u: GridFunction<T>,
    pub metric: MetricField<T>,
    /// `None` for maps that act on the Laplacian alone.
    pub potential: Option<PotentialField<T>>,
    pub h: T,
    pub scale: T,
    pub rotation: [[T; 2]; 2],
    pub shift: [T; 2],
    /// The operator on the old side that the identity refers to, after any
    /// constant shift or division of `V`.
    pub source_potential: Option<PotentialField<T>>,
    pub source_h: T,
    /// `‖P'u'‖_{L²(|x|<2)} = factor · ‖Pu‖_{L²(|y − shift| < 2·scale)}` in the
    /// continuum.
    pub residual_factor: T,
    /// Set when `V` had to be divided by 4 to bring `|dV(0)|` below ½.
    pub potential_divided: bool,
    pub resampling: ResampleRecord,
}

fn identity<T: Real>() -> [[T; 2]; 2] {
    [[T::one(), T::zero()], [T::zero(), T::one()]]
}

fn looks_periodic<T: Real>(u: &GridFunction<T>) -> bool {
    let n = u.grid().points_per_dim();
    let peak = u.sup_norm();
    if peak == T::zero() {
        return true;
    }
    let tol = T::lit(PERIODIC_TOLERANCE);
    let edge = (0..n)
        .flat_map(|i| [u.at(0, i), u.at(n - 1, i), u.at(i, 0), u.at(i, n - 1)])
        .map(|v| v.norm())
        .fold(T::zero(), T::max);
    if edge > tol * peak {
        return false;
    }
    let spec = u.spectrum();
    let axis = u.grid().axis();
    let top = spec.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let quarter = (n / 4) as i64;
    let high = spec
        .iter()
        .enumerate()
        .filter(|(k, _)| axis.wavenumber_index(k / n).abs() > quarter || axis.wavenumber_index(k % n).abs() > quarter)
        .map(|(_, v)| v.norm())
        .fold(T::zero(), T::max);
    high <= tol * top
}

/// Samples of `u` on the grid refined `PAD` times by zero padding. Nyquist
/// bins are split evenly between `±n/2`.
fn zero_padded<T: Real>(u: &GridFunction<T>) -> Result<GridFunction<T>, RescaleError> {
    let grid = *u.grid();
    let n = grid.points_per_dim();
    let nf = n * PAD;
    let axis = grid.axis();
    let targets = |m: usize| -> Vec<(usize, T)> {
        let k = axis.wavenumber_index(m);
        let bin = |k: i64| k.rem_euclid(nf as i64) as usize;
        if k == -(n as i64) / 2 {
            vec![(bin(k), T::lit(0.5)), (bin(-k), T::lit(0.5))]
        } else {
            vec![(bin(k), T::one())]
        }
    };
    let spec = u.spectrum();
    let gain = T::from_usize_exact(PAD * PAD);
    let mut fine = vec![Complex::zero(); nf * nf];
    for m1 in 0..n {
        let t1 = targets(m1);
        for m2 in 0..n {
            let v = spec[m1 * n + m2] * gain;
            for &(b1, w1) in &t1 {
                for &(b2, w2) in &targets(m2) {
                    fine[b1 * nf + b2] += v * (w1 * w2);
                }
            }
        }
    }
    let fine_grid = Grid2D::from_axis(crate::field::Grid1D::new(grid.half_width(), nf)?);
    Ok(GridFunction::from_spectrum(fine_grid, fine)?)
}

/// Cubic Lagrange weights on four consecutive nodes starting at `start`,
/// for the fractional index `t`.
fn lagrange4<T: Real>(t: T, start: i64) -> [T; 4] {
    let mut w = [T::one(); 4];
    for (k, wk) in w.iter_mut().enumerate() {
        for m in 0..4 {
            if m != k {
                let node = T::lit((start + m as i64) as f64);
                *wk *= (t - node) / T::lit(k as f64 - m as f64);
            }
        }
    }
    w
}

struct Sampler<'a, T: Real> {
    u: &'a GridFunction<T>,
    periodic: bool,
}

impl<T: Real> Sampler<'_, T> {
    fn eval(&self, y: [T; 2]) -> Option<Complex<T>> {
        let grid = self.u.grid();
        let n = grid.points_per_dim() as i64;
        let (l, dx) = (grid.half_width(), grid.spacing());
        let mut stencils = [(0i64, [T::zero(); 4]); 2];
        for a in 0..2 {
            let t = (y[a] + l) / dx;
            let last = if self.periodic { T::lit(n as f64) } else { T::lit((n - 1) as f64) };
            // tiny overshoot from rounding is clamped back
            let slack = T::lit(1e-9);
            if t < -slack || t > last + slack {
                return None;
            }
            let i = t.floor().to_i64().unwrap_or(0);
            let start = if self.periodic { i - 1 } else { (i - 1).clamp(0, n - 4) };
            stencils[a] = (start, lagrange4(t, start));
        }
        let mut acc = Complex::zero();
        for (p, &w1) in stencils[0].1.iter().enumerate() {
            let i1 = (stencils[0].0 + p as i64).rem_euclid(n) as usize;
            for (q, &w2) in stencils[1].1.iter().enumerate() {
                let i2 = (stencils[1].0 + q as i64).rem_euclid(n) as usize;
                acc += self.u.at(i1, i2) * (w1 * w2);
            }
        }
        Some(acc)
    }
}

/// `x ↦ scale · u(scale·R·x + shift)` sampled on `target`.
fn pull_function<T: Real>(
    u: &GridFunction<T>,
    target: Grid2D<T>,
    scale: T,
    rotation: [[T; 2]; 2],
    shift: [T; 2],
    method: Resampling,
) -> Result<(GridFunction<T>, ResampleRecord), RescaleError> {
    if u.grid().points_per_dim() < 4 {
        return Err(RescaleError::Hypothesis("source grid needs at least 4 points per side".into()));
    }
    let method = match method {
        Resampling::Auto if looks_periodic(u) => Resampling::BandLimited,
        Resampling::Auto => Resampling::Cubic,
        m => m,
    };
    let padded;
    let (source, periodic) = match method {
        Resampling::BandLimited => {
            padded = zero_padded(u)?;
            (&padded, true)
        }
        _ => (u, false),
    };
    let sampler = Sampler { u: source, periodic };
    let r = rotation;
    let values = (0..target.len())
        .into_par_iter()
        .map(|k| {
            let x = target.point_of(k);
            let y = [
                scale * (r[0][0] * x[0] + r[0][1] * x[1]) + shift[0],
                scale * (r[1][0] * x[0] + r[1][1] * x[1]) + shift[1],
            ];
            sampler
                .eval(y)
                .map(|v| v * scale)
                .ok_or_else(|| RescaleError::OutsideSource([y[0].as_f64(), y[1].as_f64()]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let record = ResampleRecord { method, spacing: source.grid().spacing().as_f64(), order: 4 };
    Ok((GridFunction::from_values(target, values)?, record))
}

fn check_h<T: Real>(h: T) -> Result<(), RescaleError> {
    if h > T::zero() && h <= T::one() {
        Ok(())
    } else {
        Err(RescaleError::InvalidH(h.as_f64()))
    }
}

/// `u'(x) = h^{1/2}u(h^{1/2}x)`, `g'(x) = g(h^{1/2}x)`. Then
/// `‖Δ_{g'}u'‖_{L²(|x|<2)} = h·‖Δ_g u‖_{L²(|y|<2h^{1/2})}`, so a bound `100h`
/// on the old side becomes 100 on the new one.
pub fn lemma3_rescale<T: Real>(
    u: &GridFunction<T>,
    metric: &MetricField<T>,
    h: T,
    target: Grid2D<T>,
    method: Resampling,
) -> Result<Rescaled<T>, RescaleError> {
    check_h(h)?;
    let s = h.sqrt();
    let (u2, resampling) = pull_function(u, target, s, identity(), [T::zero(); 2], method)?;
    Ok(Rescaled {
        u: u2,
        metric: metric.pulled_back([[s, T::zero()], [T::zero(), s]], [T::zero(); 2]),
        potential: None,
        h: T::one(),
        scale: s,
        rotation: identity(),
        shift: [T::zero(); 2],
        source_potential: None,
        source_h: T::one(),
        residual_factor: h,
        potential_divided: false,
        resampling,
    })
}

/// `u' = c^{1/2}u(c^{1/2}x)`, `g' = g(c^{1/2}x)`, `V' = c^{−1}V(c^{1/2}x)`,
/// `h' = h/c`. Requires `h ≤ c ≤ 1` and `½c ≤ |V| ≤ 2c` on `|x| ≤ 2c^{1/2}`.
pub fn lemma4_rescale<T: Real>(
    u: &GridFunction<T>,
    metric: &MetricField<T>,
    potential: &PotentialField<T>,
    h: T,
    c: T,
    target: Grid2D<T>,
    method: Resampling,
) -> Result<Rescaled<T>, RescaleError> {
    check_h(h)?;
    if c < h {
        return Err(RescaleError::CBelowH { c: c.as_f64(), h: h.as_f64() });
    }
    if c > T::one() {
        return Err(RescaleError::InvalidScale(c.as_f64()));
    }
    let s = c.sqrt();
    let radius = T::lit(2.0) * s;
    let half = T::lit(0.5);
    for i in -50i32..=50 {
        for j in -50i32..=50 {
            let x = [radius * T::lit(i as f64 / 50.0), radius * T::lit(j as f64 / 50.0)];
            if x[0].hypot(x[1]) > radius {
                continue;
            }
            let v = potential.v(x).abs();
            if v < half * c || v > T::lit(2.0) * c {
                return Err(RescaleError::Hypothesis(format!(
                    "|V({:?})| = {} not within [c/2, 2c] for c = {}",
                    [x[0].as_f64(), x[1].as_f64()],
                    v,
                    c
                )));
            }
        }
    }
    let (u2, resampling) = pull_function(u, target, s, identity(), [T::zero(); 2], method)?;
    Ok(Rescaled {
        u: u2,
        metric: metric.pulled_back([[s, T::zero()], [T::zero(), s]], [T::zero(); 2]),
        potential: Some(potential.scaled(c.recip(), s)),
        h: h / c,
        scale: s,
        rotation: identity(),
        shift: [T::zero(); 2],
        source_potential: Some(potential.clone()),
        source_h: h,
        residual_factor: c.recip(),
        potential_divided: false,
        resampling,
    })
}

/// The zero-crossing reduction. Subtracts `V(0)` (at most `h`), divides `V`
/// by 4 if `|dV(0)| > ½`, rotates `dV(0)` onto `e₁` and rescales by
/// `β = |dV(0)|`: `u' = βu(βRx)`, `V' = β^{−2}V(βRx)`, `h' = β^{−2}h`, so that
/// `V'(0) = 0` and `dV'(0) = e₁`.
pub fn case2_rescale<T: Real>(
    u: &GridFunction<T>,
    metric: &MetricField<T>,
    potential: &PotentialField<T>,
    h: T,
    target: Grid2D<T>,
    method: Resampling,
) -> Result<Rescaled<T>, RescaleError> {
    check_h(h)?;
    let origin = [T::zero(); 2];
    let v0 = potential.v(origin);
    if v0.abs() > h {
        return Err(RescaleError::Hypothesis(format!("|V(0)| = {v0} exceeds h = {h}")));
    }
    let grad = potential.grad_v(origin);
    let mut beta = grad[0].hypot(grad[1]);
    let half = T::lit(0.5);
    let divided = beta > half;
    let k = if divided { T::lit(0.25) } else { T::one() };
    beta *= k;
    let lo = T::lit(8.0) * h.sqrt();
    if beta < lo || beta > half {
        return Err(RescaleError::BetaOutOfRange { beta: beta.as_f64(), lo: lo.as_f64(), hi: 0.5 });
    }
    let (a, b) = (grad[0] / (beta / k), grad[1] / (beta / k));
    let rotation = [[a, -b], [b, a]];
    let source = potential.transformed(k, identity(), origin, -k * v0);
    let map = [[beta * a, -beta * b], [beta * b, beta * a]];
    let b2 = (beta * beta).recip();
    let (u2, resampling) = pull_function(u, target, beta, rotation, origin, method)?;
    Ok(Rescaled {
        u: u2,
        metric: metric.rotated(rotation).pulled_back([[beta, T::zero()], [T::zero(), beta]], origin),
        potential: Some(potential.transformed(k * b2, map, origin, -k * v0 * b2)),
        h: h * b2,
        scale: beta,
        rotation,
        shift: origin,
        source_potential: Some(source),
        source_h: h,
        residual_factor: b2,
        potential_divided: divided,
        resampling,
    })
}

/// Both sides of a rescaling identity evaluated with discrete operators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualIdentity {
    /// `‖P'u'‖_{L²(|x|<2)}` on the new grid.
    pub rescaled: f64,
    /// `factor · ‖Pu‖_{L²(|y − shift| < 2·scale)}` on the old grid.
    pub predicted: f64,
    pub relative_error: f64,
    /// `‖u'‖_{L²}` over `‖u‖_{L²}` minus one.
    pub isometry_error: f64,
}

/// Applies the old and new operators and compares the residual norms on the
/// corresponding disks.
pub fn residual_identity<T: Real>(
    source: &GridFunction<T>,
    source_metric: &MetricField<T>,
    r: &Rescaled<T>,
    backend: Backend,
) -> Result<ResidualIdentity, RescaleError> {
    let zero = PotentialField::constant(T::zero());
    let p = assemble(r.source_h, source_metric, r.source_potential.as_ref().unwrap_or(&zero), *source.grid(), backend)?;
    let q = assemble(r.h, &r.metric, r.potential.as_ref().unwrap_or(&zero), *r.u.grid(), backend)?;
    let two = T::lit(2.0);
    let rs = two * r.scale;
    let shift = r.shift;
    let old = weighted_norm(&p.apply(source)?, |y| {
        if (y[0] - shift[0]).hypot(y[1] - shift[1]) < rs {
            T::one()
        } else {
            T::zero()
        }
    });
    let new = weighted_norm(&q.apply(&r.u)?, |x| if x[0].hypot(x[1]) < two { T::one() } else { T::zero() });
    let predicted = (r.residual_factor * old).as_f64();
    let rescaled = new.as_f64();
    Ok(ResidualIdentity {
        rescaled,
        predicted,
        relative_error: (rescaled - predicted).abs() / predicted,
        isometry_error: (r.u.l2_norm() / source.l2_norm()).as_f64() - 1.0,
    })
}
