//! Stochastic eigenvalue counting (kernel polynomial method).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::folded::{dot, ShiftedOperator};
use crate::scalar::Real;

/// Estimates the number of eigenvalues of `S − σ` in `[−w, w]`, given an
/// interval `[lo, hi]` (shifted) containing the whole spectrum.
///
/// Jackson-damped Chebyshev expansion of the indicator, traced with
/// Rademacher probes.
pub(crate) fn estimate_count<T: Real, O: ShiftedOperator<T>>(
    op: &O,
    half_width: T,
    (lo, hi): (T, T),
    probes: usize,
    degree: usize,
    seed: u64,
) -> T {
    let n = op.dim();
    let two = T::lit(2.0);
    let center = (hi + lo) / two;
    let radius = (hi - lo) / two * T::lit(1.01);
    let clamp = |x: T| x.max(-T::one()).min(T::one());
    let a = clamp((-half_width - center) / radius).acos();
    let b = clamp((half_width - center) / radius).acos();
    let pi = T::PI();
    let m = degree + 1;
    let mf = T::from_usize_exact(m + 1);
    let coef: Vec<T> = (0..m)
        .map(|k| {
            let kf = T::from_usize_exact(k);
            let c = if k == 0 { (a - b) / pi } else { two * ((kf * a).sin() - (kf * b).sin()) / (kf * pi) };
            let jackson = ((mf - kf) * (pi * kf / mf).cos() + (pi * kf / mf).sin() / (pi / mf).tan()) / mf;
            c * jackson
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = T::zero();
    let mut sx = vec![T::zero(); n];
    for _ in 0..probes {
        let z: Vec<T> = (0..n).map(|_| if rng.random::<bool>() { T::one() } else { -T::one() }).collect();
        // T_0 z, T_1 z with the operator mapped onto [−1, 1]
        let mut prev = z.clone();
        op.apply(&prev, &mut sx);
        let mut cur: Vec<T> = sx.iter().zip(&prev).map(|(s, p)| (*s - center * *p) / radius).collect();
        let mut acc = coef[0] * dot(&z, &prev) + if m > 1 { coef[1] * dot(&z, &cur) } else { T::zero() };
        for c in coef.iter().skip(2) {
            op.apply(&cur, &mut sx);
            let next: Vec<T> =
                sx.iter().zip(&cur).zip(&prev).map(|((s, q), p)| two * (*s - center * *q) / radius - *p).collect();
            acc += *c * dot(&z, &next);
            prev = std::mem::replace(&mut cur, next);
        }
        total += acc;
    }
    total / T::from_usize_exact(probes)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diagonal(Vec<f64>);

    impl ShiftedOperator<f64> for Diagonal {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.0) {
                *yi = di * xi;
            }
        }
        fn precondition(&self, r: &[f64], out: &mut [f64]) {
            out.copy_from_slice(r);
        }
    }

    #[test]
    fn counts_uniform_spectrum() {
        let d: Vec<f64> = (0..2000).map(|i| -1.0 + 2.0 * i as f64 / 1999.0).collect();
        let est = estimate_count(&Diagonal(d), 0.25, (-1.0, 1.0), 20, 400, 1);
        // exact count 500
        assert!((est - 500.0).abs() < 60.0, "{est}");
    }
}
