//! Smooth real coefficient functions on ℝ² with access to partial derivatives.
//!
//! Potentials and metric entries are built from these. Polynomials and
//! trigonometric products provide partials of every order (needed for the
//! `C_N` constants); closure-backed fields stop at order two.

use std::fmt::{self, Debug};
use std::sync::Arc;

use crate::scalar::Real;

pub trait SmoothField<T: Real>: Send + Sync + Debug {
    fn value(&self, x: [T; 2]) -> T;

    /// `∂^α f(x)` for `α = (α₁, α₂)`; `None` if this field does not provide
    /// that order. Every field provides orders ≤ 2.
    fn partial(&self, alpha: [usize; 2], x: [T; 2]) -> Option<T>;

    fn is_constant(&self) -> bool {
        false
    }

    fn gradient(&self, x: [T; 2]) -> [T; 2] {
        [self.partial([1, 0], x).unwrap(), self.partial([0, 1], x).unwrap()]
    }

    fn hessian(&self, x: [T; 2]) -> [[T; 2]; 2] {
        let xy = self.partial([1, 1], x).unwrap();
        [[self.partial([2, 0], x).unwrap(), xy], [xy, self.partial([0, 2], x).unwrap()]]
    }
}

pub type SharedField<T> = Arc<dyn SmoothField<T>>;

fn falling<T: Real>(n: usize, k: usize) -> T {
    (0..k).fold(T::one(), |acc, i| acc * T::from_usize_exact(n - i))
}

/// `Σ c_{ij} x₁^i x₂^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial2<T> {
    terms: Vec<(usize, usize, T)>,
}

impl<T: Real> Polynomial2<T> {
    pub fn from_terms(terms: &[(usize, usize, T)]) -> Self {
        Self { terms: terms.iter().copied().filter(|t| t.2 != T::zero()).collect() }
    }

    pub fn constant(c: T) -> Self {
        Self::from_terms(&[(0, 0, c)])
    }

    /// Coefficients in graded order `1, x₁, x₂, x₁², x₁x₂, x₂², x₁³, …`.
    pub fn from_graded(coefficients: &[T]) -> Self {
        let mut terms = Vec::new();
        let mut it = coefficients.iter();
        'outer: for degree in 0.. {
            for j in 0..=degree {
                match it.next() {
                    Some(&c) => terms.push((degree - j, j, c)),
                    None => break 'outer,
                }
            }
        }
        Self::from_terms(&terms)
    }

    pub fn terms(&self) -> &[(usize, usize, T)] {
        &self.terms
    }
}

impl<T: Real> SmoothField<T> for Polynomial2<T> {
    fn value(&self, x: [T; 2]) -> T {
        self.terms.iter().map(|&(i, j, c)| c * x[0].powi(i as i32) * x[1].powi(j as i32)).sum()
    }

    fn partial(&self, alpha: [usize; 2], x: [T; 2]) -> Option<T> {
        Some(
            self.terms
                .iter()
                .filter(|&&(i, j, _)| i >= alpha[0] && j >= alpha[1])
                .map(|&(i, j, c)| {
                    c * falling::<T>(i, alpha[0])
                        * falling::<T>(j, alpha[1])
                        * x[0].powi((i - alpha[0]) as i32)
                        * x[1].powi((j - alpha[1]) as i32)
                })
                .sum(),
        )
    }

    fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(i, j, _)| i + j == 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wave {
    Cos,
    Sin,
}

/// `c · w₁(ω₁x₁) · w₂(ω₂x₂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigTerm<T> {
    pub coefficient: T,
    pub first: (Wave, T),
    pub second: (Wave, T),
}

/// Finite sum of [`TrigTerm`]s. A term with `Cos` at frequency zero in both
/// factors is a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries2<T> {
    terms: Vec<TrigTerm<T>>,
}

impl<T: Real> TrigSeries2<T> {
    pub fn new(terms: Vec<TrigTerm<T>>) -> Self {
        Self { terms }
    }

    pub fn constant(c: T) -> TrigTerm<T> {
        TrigTerm { coefficient: c, first: (Wave::Cos, T::zero()), second: (Wave::Cos, T::zero()) }
    }
}

fn wave_derivative<T: Real>(w: Wave, omega: T, order: usize, x: T) -> T {
    // d^n/dx^n cos(ωx) = ω^n cos(ωx + nπ/2), same shift for sin
    let shift = T::from_usize_exact(order % 4) * T::FRAC_PI_2();
    let arg = omega * x + shift;
    let base = match w {
        Wave::Cos => arg.cos(),
        Wave::Sin => arg.sin(),
    };
    if order == 0 {
        base
    } else {
        omega.powi(order as i32) * base
    }
}

impl<T: Real> SmoothField<T> for TrigSeries2<T> {
    fn value(&self, x: [T; 2]) -> T {
        self.partial([0, 0], x).unwrap()
    }

    fn partial(&self, alpha: [usize; 2], x: [T; 2]) -> Option<T> {
        Some(
            self.terms
                .iter()
                .map(|t| {
                    t.coefficient
                        * wave_derivative(t.first.0, t.first.1, alpha[0], x[0])
                        * wave_derivative(t.second.0, t.second.1, alpha[1], x[1])
                })
                .sum(),
        )
    }

    fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| {
            t.coefficient == T::zero()
                || (t.first == (Wave::Cos, T::zero()) && t.second == (Wave::Cos, T::zero()))
        })
    }
}

type ValueFn<T> = dyn Fn([T; 2]) -> T + Send + Sync;
type GradFn<T> = dyn Fn([T; 2]) -> [T; 2] + Send + Sync;
type HessFn<T> = dyn Fn([T; 2]) -> [[T; 2]; 2] + Send + Sync;

/// Field given by value, gradient and Hessian callables (orders ≤ 2 only).
#[derive(Clone)]
pub struct ClosureField<T> {
    value: Arc<ValueFn<T>>,
    gradient: Arc<GradFn<T>>,
    hessian: Arc<HessFn<T>>,
}

impl<T> Debug for ClosureField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ClosureField")
    }
}

impl<T: Real> ClosureField<T> {
    pub fn new(
        value: impl Fn([T; 2]) -> T + Send + Sync + 'static,
        gradient: impl Fn([T; 2]) -> [T; 2] + Send + Sync + 'static,
        hessian: impl Fn([T; 2]) -> [[T; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), gradient: Arc::new(gradient), hessian: Arc::new(hessian) }
    }
}

impl<T: Real> SmoothField<T> for ClosureField<T> {
    fn value(&self, x: [T; 2]) -> T {
        (self.value)(x)
    }

    fn partial(&self, alpha: [usize; 2], x: [T; 2]) -> Option<T> {
        match alpha {
            [0, 0] => Some((self.value)(x)),
            [1, 0] => Some((self.gradient)(x)[0]),
            [0, 1] => Some((self.gradient)(x)[1]),
            [2, 0] => Some((self.hessian)(x)[0][0]),
            [1, 1] => Some((self.hessian)(x)[0][1]),
            [0, 2] => Some((self.hessian)(x)[1][1]),
            _ => None,
        }
    }
}

/// `x ↦ scale · F(M x + shift) + offset`.
#[derive(Clone, Debug)]
pub struct AffineField<T: Real> {
    inner: SharedField<T>,
    scale: T,
    offset: T,
    map: [[T; 2]; 2],
    shift: [T; 2],
}

impl<T: Real> AffineField<T> {
    pub fn new(inner: SharedField<T>, scale: T, map: [[T; 2]; 2], shift: [T; 2], offset: T) -> Self {
        Self { inner, scale, offset, map, shift }
    }

    fn pull(&self, x: [T; 2]) -> [T; 2] {
        let m = &self.map;
        [m[0][0] * x[0] + m[0][1] * x[1] + self.shift[0], m[1][0] * x[0] + m[1][1] * x[1] + self.shift[1]]
    }
}

/// Coefficients `c_p` with `∂^α (F∘M) = Σ_p c_p (∂₁^p ∂₂^{n−p} F)∘M`.
pub(crate) fn chain_rule_coefficients<T: Real>(map: &[[T; 2]; 2], alpha: [usize; 2]) -> Vec<T> {
    let mut poly = vec![T::one()];
    let mut apply = |c1: T, c2: T| {
        let mut next = vec![T::zero(); poly.len() + 1];
        for (p, &v) in poly.iter().enumerate() {
            next[p + 1] += c1 * v;
            next[p] += c2 * v;
        }
        poly = next;
    };
    for _ in 0..alpha[0] {
        apply(map[0][0], map[1][0]);
    }
    for _ in 0..alpha[1] {
        apply(map[0][1], map[1][1]);
    }
    poly
}

impl<T: Real> SmoothField<T> for AffineField<T> {
    fn value(&self, x: [T; 2]) -> T {
        self.scale * self.inner.value(self.pull(x)) + self.offset
    }

    fn partial(&self, alpha: [usize; 2], x: [T; 2]) -> Option<T> {
        if alpha == [0, 0] {
            return Some(self.value(x));
        }
        let y = self.pull(x);
        let n = alpha[0] + alpha[1];
        let coeffs = chain_rule_coefficients(&self.map, alpha);
        let mut acc = T::zero();
        for (p, &c) in coeffs.iter().enumerate() {
            if c != T::zero() {
                acc += c * self.inner.partial([p, n - p], y)?;
            }
        }
        Some(self.scale * acc)
    }

    fn is_constant(&self) -> bool {
        self.scale == T::zero() || self.inner.is_constant()
    }
}

/// `Σ a_k F_k`.
#[derive(Clone, Debug)]
pub struct LinearCombination<T: Real> {
    terms: Vec<(T, SharedField<T>)>,
}

impl<T: Real> LinearCombination<T> {
    pub fn new(terms: Vec<(T, SharedField<T>)>) -> Self {
        Self { terms }
    }
}

impl<T: Real> SmoothField<T> for LinearCombination<T> {
    fn value(&self, x: [T; 2]) -> T {
        self.terms.iter().map(|(a, f)| *a * f.value(x)).sum()
    }

    fn partial(&self, alpha: [usize; 2], x: [T; 2]) -> Option<T> {
        let mut acc = T::zero();
        for (a, f) in &self.terms {
            if *a != T::zero() {
                acc += *a * f.partial(alpha, x)?;
            }
        }
        Some(acc)
    }

    fn is_constant(&self) -> bool {
        self.terms.iter().all(|(a, f)| *a == T::zero() || f.is_constant())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_partial(f: &dyn SmoothField<f64>, alpha: [usize; 2], x: [f64; 2]) -> f64 {
        // nested central differences, step 1e-3
        let e = 1e-3;
        if alpha == [0, 0] {
            return f.value(x);
        }
        let (i, rest) = if alpha[0] > 0 { (0, [alpha[0] - 1, alpha[1]]) } else { (1, [alpha[0], alpha[1] - 1]) };
        let mut xp = x;
        let mut xm = x;
        xp[i] += e;
        xm[i] -= e;
        (fd_partial(f, rest, xp) - fd_partial(f, rest, xm)) / (2.0 * e)
    }

    #[test]
    fn polynomial_partials_match_hand_values() {
        // p = 3 + 2x₁ − x₁x₂² + 0.5x₂³
        let p = Polynomial2::<f64>::from_terms(&[(0, 0, 3.0), (1, 0, 2.0), (1, 2, -1.0), (0, 3, 0.5)]);
        let x = [0.7, -1.3];
        assert!((p.value(x) - (3.0 + 1.4 - 0.7 * 1.69 + 0.5 * -2.197)).abs() < 1e-14);
        assert_eq!(p.partial([1, 2], x), Some(-2.0));
        assert_eq!(p.partial([0, 3], x), Some(3.0));
        assert_eq!(p.partial([2, 0], x), Some(0.0));
        assert!(!p.is_constant());
        assert!(Polynomial2::constant(4.0).is_constant());
    }

    #[test]
    fn graded_order() {
        let p = Polynomial2::<f64>::from_graded(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = [0.5, -2.0];
        let want = 1.0 + 2.0 * 0.5 + 3.0 * -2.0 + 4.0 * 0.25 + 5.0 * 0.5 * -2.0 + 6.0 * 4.0;
        assert!((p.value(x) - want).abs() < 1e-14);
    }

    #[test]
    fn trig_partials_match_finite_differences() {
        let f = TrigSeries2::new(vec![
            TrigTerm { coefficient: 0.3, first: (Wave::Sin, 1.0), second: (Wave::Cos, 2.0) },
            TrigSeries2::constant(-1.0),
        ]);
        let x = [0.4, 0.9];
        for alpha in [[1, 0], [0, 1], [1, 1], [2, 0], [0, 2]] {
            let exact = f.partial(alpha, x).unwrap();
            assert!((exact - fd_partial(&f, alpha, x)).abs() < 1e-5, "{alpha:?}");
        }
    }

    #[test]
    fn affine_chain_rule_matches_finite_differences() {
        let inner: SharedField<f64> = Arc::new(Polynomial2::from_terms(&[(3, 0, 1.0), (1, 1, 2.0), (0, 2, -0.5)]));
        let (c, s) = (0.6f64, 0.8f64);
        let f = AffineField::new(inner, 1.7, [[c, -s], [s, c]], [0.1, -0.2], 0.3);
        let x = [0.25, -0.4];
        for alpha in [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2], [2, 1]] {
            let exact = f.partial(alpha, x).unwrap();
            assert!((exact - fd_partial(&f, alpha, x)).abs() < 1e-4, "{alpha:?}: {exact}");
        }
    }

    #[test]
    fn closure_field_stops_at_order_two() {
        let f = ClosureField::new(|x: [f64; 2]| x[0], |_| [1.0, 0.0], |_| [[0.0; 2]; 2]);
        assert_eq!(f.partial([1, 0], [0.0, 0.0]), Some(1.0));
        assert_eq!(f.partial([3, 0], [0.0, 0.0]), None);
    }
}
