use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RescaleError;
use crate::field::smooth::Polynomial2;
use crate::field::PotentialField;
use crate::scalar::Real;

/// Case 1 needs `|dV| ≤ 8h^{1/2}`.
pub const CASE1_GRADIENT: f64 = 8.0;
/// Case 3 needs `|dV| ≤ 9|V|^{1/2}`.
pub const CASE3_GRADIENT: f64 = 9.0;
/// Case 3 radius `|V|^{1/2}/40`.
pub const CASE3_RADIUS: f64 = 1.0 / 40.0;
/// Case 4 looks for a zero of `V` within `|V|^{1/2}/8`.
pub const CASE4_ZERO_DISTANCE: f64 = 1.0 / 8.0;
/// Case 4 radius `0.9998·|dV|`.
pub const CASE4_RADIUS: f64 = 0.9998;
/// No ball is larger than this.
pub const MAX_RADIUS: f64 = 0.5;
const NEWTON_ITERATIONS: usize = 50;
const NEWTON_TOLERANCE: f64 = 1e-12;
const MAX_DEPTH: usize = 40;

/// Which case applies at `center`, and the ball on which it bounds `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseDecision {
    pub case_id: u8,
    pub center: [f64; 2],
    pub radius: f64,
    /// Case 4: the zero of `V` the translation moves to the origin.
    pub translation: Option<[f64; 2]>,
    /// `β = |dV|` in Cases 2 and 4, `c = |V|` in Case 3, zero in Case 1.
    pub beta_or_c: f64,
    pub value: f64,
    pub gradient_norm: f64,
}

impl CaseDecision {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        (x[0] - self.center[0]).hypot(x[1] - self.center[1]) < self.radius
    }

    /// Whether the closed square with this center and half side lies in the
    /// open ball.
    fn contains_square(&self, c: [f64; 2], a: f64) -> bool {
        let dx = (c[0] - self.center[0]).abs() + a;
        let dy = (c[1] - self.center[1]).abs() + a;
        dx.hypot(dy) < self.radius
    }
}

/// Which of the four case conditions hold, each read literally with
/// non-strict inequalities: `|V| ≤ h ∧ |dV| ≤ 8h^{1/2}`, `|V| ≤ h ∧ |dV| ≥
/// 8h^{1/2}`, `|V| ≥ h ∧ |dV| ≤ 9|V|^{1/2}`, `|V| ≥ h ∧ |dV| ≥ 9|V|^{1/2}`.
pub fn case_conditions(value: f64, gradient: f64, h: f64) -> [bool; 4] {
    let v = value.abs();
    let low = CASE1_GRADIENT * h.sqrt();
    let mid = CASE3_GRADIENT * v.sqrt();
    [v <= h && gradient <= low, v <= h && gradient >= low, v >= h && gradient <= mid, v >= h && gradient >= mid]
}

/// Picks the lowest-numbered case whose conditions hold at `x0`.
pub fn classify_case<T: Real>(potential: &PotentialField<T>, h: T, x0: [T; 2]) -> Result<CaseDecision, RescaleError> {
    let hf = h.as_f64();
    if !(hf > 0.0 && hf <= 0.25) {
        return Err(RescaleError::InvalidH(hf));
    }
    let center = [x0[0].as_f64(), x0[1].as_f64()];
    if center[0].hypot(center[1]) >= 1.0 {
        return Err(RescaleError::OutsideBall(center));
    }
    let value = potential.v(x0).as_f64();
    let grad = potential.grad_v(x0);
    let gradient_norm = grad[0].hypot(grad[1]).as_f64();
    let conditions = case_conditions(value, gradient_norm, hf);
    let case = conditions.iter().position(|&c| c).expect("the four conditions cover every (V, dV)");
    let v = value.abs();
    let mut d = CaseDecision { case_id: case as u8 + 1, center, radius: 0.0, translation: None, beta_or_c: 0.0, value, gradient_norm };
    match case {
        0 => d.radius = hf.sqrt(),
        1 => {
            d.radius = gradient_norm.min(MAX_RADIUS);
            d.beta_or_c = gradient_norm;
        }
        2 => {
            d.radius = CASE3_RADIUS * v.sqrt();
            d.beta_or_c = v;
        }
        _ => {
            let bound = CASE4_ZERO_DISTANCE * v.sqrt();
            let zero = newton_zero(potential, x0, grad).filter(|z| (z[0] - center[0]).hypot(z[1] - center[1]) <= bound);
            let Some(zero) = zero else {
                return Err(RescaleError::ZeroNotFound { x0: center, bound });
            };
            d.translation = Some(zero);
            d.radius = (CASE4_RADIUS * gradient_norm).min(MAX_RADIUS);
            d.beta_or_c = gradient_norm;
        }
    }
    Ok(d)
}

/// 1D Newton iteration for `V(x0 + t·n) = 0` along `n = dV(x0)/|dV(x0)|`.
fn newton_zero<T: Real>(potential: &PotentialField<T>, x0: [T; 2], grad: [T; 2]) -> Option<[f64; 2]> {
    let norm = grad[0].hypot(grad[1]);
    let n = [grad[0] / norm, grad[1] / norm];
    let at = |t: T| [x0[0] + t * n[0], x0[1] + t * n[1]];
    let tol = T::lit(NEWTON_TOLERANCE);
    let mut t = T::zero();
    for _ in 0..NEWTON_ITERATIONS {
        let x = at(t);
        let f = potential.v(x);
        let g = potential.grad_v(x);
        let slope = g[0] * n[0] + g[1] * n[1];
        if slope == T::zero() {
            return None;
        }
        let step = f / slope;
        t -= step;
        if step.abs() <= tol * t.abs().max(T::one()) || f.abs() <= tol {
            let x = at(t);
            return Some([x[0].as_f64(), x[1].as_f64()]);
        }
    }
    None
}

/// Bucket index over `[−1.5, 1.5]²` listing every ball whose bounding box
/// meets each cell.
#[derive(Clone, Debug)]
struct BallIndex {
    cells: Vec<Vec<u32>>,
}

const INDEX_CELLS: usize = 128;
const INDEX_EXTENT: f64 = 1.5;

impl BallIndex {
    fn new() -> Self {
        Self { cells: vec![Vec::new(); INDEX_CELLS * INDEX_CELLS] }
    }

    fn cell_of(x: f64) -> usize {
        let t = (x + INDEX_EXTENT) / (2.0 * INDEX_EXTENT) * INDEX_CELLS as f64;
        (t.floor().max(0.0) as usize).min(INDEX_CELLS - 1)
    }

    fn insert(&mut self, id: u32, d: &CaseDecision) {
        let (a0, a1) = (Self::cell_of(d.center[0] - d.radius), Self::cell_of(d.center[0] + d.radius));
        let (b0, b1) = (Self::cell_of(d.center[1] - d.radius), Self::cell_of(d.center[1] + d.radius));
        for a in a0..=a1 {
            for b in b0..=b1 {
                self.cells[a * INDEX_CELLS + b].push(id);
            }
        }
    }

    fn near(&self, x: [f64; 2]) -> &[u32] {
        &self.cells[Self::cell_of(x[0]) * INDEX_CELLS + Self::cell_of(x[1])]
    }
}

/// Balls from [`cover_ball`] whose union contains the unit ball.
#[derive(Clone, Debug)]
pub struct BallCover {
    pub h: f64,
    pub decisions: Vec<CaseDecision>,
    /// Quadtree squares that were certified as lying inside one ball.
    pub certified_squares: usize,
    index: BallIndex,
}

impl BallCover {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.index.near(x).iter().any(|&i| self.decisions[i as usize].contains(x))
    }

    /// Number of balls per case.
    pub fn case_counts(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for d in &self.decisions {
            out[d.case_id as usize - 1] += 1;
        }
        out
    }

    fn push(&mut self, d: CaseDecision) {
        let id = self.decisions.len() as u32;
        self.index.insert(id, &d);
        self.decisions.push(d);
    }

    fn square_covered(&self, c: [f64; 2], a: f64) -> bool {
        self.index.near(c).iter().any(|&i| self.decisions[i as usize].contains_square(c, a))
    }
}

/// Covers `{|x| < 1}` by case balls. A quadtree over `[−1, 1]²` is walked
/// depth first in a fixed order; a square meeting the unit ball is accepted
/// once it lies inside a single ball, otherwise the case at its center (moved
/// into the ball if needed) adds a ball and the square is split. The union
/// of accepted squares contains the unit ball, so coverage is exact.
pub fn cover_ball<T: Real>(potential: &PotentialField<T>, h: T) -> Result<BallCover, RescaleError> {
    let mut cover = BallCover { h: h.as_f64(), decisions: Vec::new(), certified_squares: 0, index: BallIndex::new() };
    let mut stack = vec![([0.0f64, 0.0f64], 1.0f64, 0usize)];
    while let Some((c, a, depth)) = stack.pop() {
        let gap = (c[0].abs() - a).max(0.0).hypot((c[1].abs() - a).max(0.0));
        if gap >= 1.0 {
            continue;
        }
        if cover.square_covered(c, a) {
            cover.certified_squares += 1;
            continue;
        }
        let r = c[0].hypot(c[1]);
        let p = if r < 1.0 - 1e-9 { c } else { [c[0] / r * (1.0 - 1e-9), c[1] / r * (1.0 - 1e-9)] };
        let d = classify_case(potential, h, [T::lit(p[0]), T::lit(p[1])])?;
        let done = d.contains_square(c, a);
        cover.push(d);
        if done {
            cover.certified_squares += 1;
            continue;
        }
        if depth >= MAX_DEPTH {
            return Err(RescaleError::CoverageGap(depth));
        }
        let q = 0.5 * a;
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            stack.push(([c[0] + sx * q, c[1] + sy * q], q, depth + 1));
        }
    }
    Ok(cover)
}

/// Named test potentials, all satisfying the normalization conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinPotential {
    /// `V = 0`.
    Zero,
    /// `V = x₁/2`.
    Linear,
    /// `V = 0.3 + 0.004|x|²`.
    QuadraticWell,
    /// `V = 0.004(x₁² − x₂²)`.
    Saddle,
}

impl BuiltinPotential {
    pub const ALL: [Self; 4] = [Self::Zero, Self::Linear, Self::QuadraticWell, Self::Saddle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Linear => "linear",
            Self::QuadraticWell => "quadratic-well",
            Self::Saddle => "saddle",
        }
    }

    pub fn potential<T: Real>(self) -> PotentialField<T> {
        let l = T::lit;
        let terms: Vec<(usize, usize, T)> = match self {
            Self::Zero => vec![],
            Self::Linear => vec![(1, 0, l(0.5))],
            Self::QuadraticWell => vec![(0, 0, l(0.3)), (2, 0, l(0.004)), (0, 2, l(0.004))],
            Self::Saddle => vec![(2, 0, l(0.004)), (0, 2, l(-0.004))],
        };
        PotentialField::from_field(Polynomial2::from_terms(&terms))
    }
}

impl fmt::Display for BuiltinPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinPotential {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|b| b.name() == s).ok_or_else(|| format!("unknown potential `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MetricField;
    use crate::rescale::verify_normalization;

    fn linear(a: f64, b: f64, c: f64) -> PotentialField<f64> {
        PotentialField::from_field(Polynomial2::from_terms(&[(0, 0, c), (1, 0, a), (0, 1, b)]))
    }

    #[test]
    fn flat_point_is_case_one() {
        let d = classify_case(&PotentialField::constant(0.0), 1.0 / 256.0, [0.2, 0.3]).unwrap();
        assert_eq!(d.case_id, 1);
        assert_eq!(d.radius, 1.0 / 16.0);
    }

    #[test]
    fn unit_gradient_is_case_two_with_capped_radius() {
        let d = classify_case(&linear(1.0, 0.0, 0.0), 1.0 / 256.0, [0.0, 0.0]).unwrap();
        assert_eq!(d.case_id, 2);
        assert_eq!(d.radius, 0.5);
        assert_eq!(d.beta_or_c, 1.0);
    }

    #[test]
    fn elliptic_point_is_case_three() {
        let d = classify_case(&PotentialField::constant(0.25), 1.0 / 256.0, [0.0, 0.0]).unwrap();
        assert_eq!(d.case_id, 3);
        assert_eq!(d.radius, 0.5 / 40.0);
        assert_eq!(d.beta_or_c, 0.25);
    }

    #[test]
    fn steep_crossing_is_case_four() {
        // V = x₁/2 at x₁ = 0.002 with h = 2^{−12}: |V| = 0.001 > h and
        // 9|V|^{1/2} ≈ 0.285 < 1/2
        let h = 1.0 / 4096.0;
        let d = classify_case(&linear(0.5, 0.0, 0.0), h, [0.002, 0.1]).unwrap();
        assert_eq!(d.case_id, 4);
        let z = d.translation.unwrap();
        assert!(z[0].abs() < 1e-12 && (z[1] - 0.1).abs() < 1e-15);
        assert!((d.radius - 0.5 * 0.9998).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_the_lower_case() {
        let h = 1.0 / 64.0;
        // |V| = h and |dV| = 8h^{1/2} = 1 satisfy the first three conditions
        let c = case_conditions(h, 1.0, h);
        assert_eq!(c, [true, true, true, false]);
        let d = classify_case(&linear(1.0, 0.0, h), h, [0.0, 0.0]).unwrap();
        assert_eq!(d.case_id, 1);
        // |dV| = 9|V|^{1/2} sits on the Case 3/4 boundary
        let v = 0.25;
        assert_eq!(case_conditions(v, 4.5, h), [false, false, true, true]);
    }

    #[test]
    fn preconditions_are_checked() {
        let v = PotentialField::constant(0.0);
        assert!(classify_case(&v, 0.5, [0.0, 0.0]).is_err());
        assert!(classify_case(&v, 0.1, [1.0, 0.0]).is_err());
    }

    #[test]
    fn builtins_are_normalized() {
        for b in BuiltinPotential::ALL {
            let r = verify_normalization(&MetricField::identity(), &b.potential::<f64>());
            assert!(r.passes(), "{b}: {r:?}");
            assert_eq!(b.name().parse::<BuiltinPotential>().unwrap(), b);
        }
    }

    #[test]
    fn zero_potential_cover_packs_case_one_balls() {
        let h = 1.0 / 256.0;
        let cover = cover_ball(&PotentialField::constant(0.0), h).unwrap();
        assert_eq!(cover.case_counts()[1..], [0, 0, 0]);
        // (2/h^{1/2})² = 1024 within a small factor
        let n = cover.decisions.len();
        assert!(n > 500 && n < 4 * 1024, "{n}");
        for i in 0..200 {
            for j in 0..200 {
                let x = [-1.0 + (i as f64 + 0.5) / 100.0, -1.0 + (j as f64 + 0.5) / 100.0];
                if x[0].hypot(x[1]) < 1.0 {
                    assert!(cover.contains(x));
                }
            }
        }
    }

    #[test]
    fn linear_cover_has_positive_radii() {
        let cover = cover_ball(&BuiltinPotential::Linear.potential::<f64>(), 1.0 / 256.0).unwrap();
        assert!(cover.decisions.iter().all(|d| d.radius > 0.0));
        assert!(cover.contains([0.999, 0.0]) && cover.contains([0.0, -0.999]));
    }
}
