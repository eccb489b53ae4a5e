//! Folded-spectrum block eigensolver.
//!
//! Interior eigenvalues of a symmetric `S` near `σ` are the smallest
//! eigenvalues of `A = (S − σ)²`. A preconditioned LOBPCG iteration finds
//! them; Rayleigh–Ritz of `S − σ` on the converged block recovers the signs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dense::symmetric_eigen;
use crate::scalar::Real;

/// A symmetric operator already shifted by `σ`, with a preconditioner for
/// `(S − σ)²`.
pub(crate) trait ShiftedOperator<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
    fn precondition(&self, r: &[T], out: &mut [T]);

    fn apply_many(&self, xs: &[Vec<T>]) -> Vec<Vec<T>> {
        xs.par_iter()
            .map(|x| {
                let mut y = vec![T::zero(); self.dim()];
                self.apply(x, &mut y);
                y
            })
            .collect()
    }

    fn precondition_many(&self, rs: &[Vec<T>]) -> Vec<Vec<T>> {
        rs.par_iter()
            .map(|r| {
                let mut y = vec![T::zero(); self.dim()];
                self.precondition(r, &mut y);
                y
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Target<T> {
    /// Every eigenvalue with `|μ| ≤ half_width`.
    Window { half_width: T, max_count: usize },
    /// The `count` eigenvalues with smallest `|μ|`.
    Nearest { count: usize },
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SolverSettings<T> {
    pub tolerance: T,
    pub guard_tolerance: T,
    pub max_iterations: usize,
    pub initial_block: usize,
    pub refresh_every: usize,
    pub seed: u64,
}

#[derive(Debug)]
pub(crate) struct Solution<T> {
    /// Shifted eigenvalues `μ = E − σ`, ascending.
    pub values: Vec<T>,
    /// Euclidean unit vectors.
    pub vectors: Vec<Vec<T>>,
    pub residuals: Vec<T>,
}

#[derive(Debug)]
pub(crate) enum Failure<T> {
    NotConverged { iterations: usize, residuals: Vec<T> },
    /// More Ritz values inside the window than the block can hold.
    Overflow,
}

pub(crate) const WINDOW_SLACK: f64 = 1e-9;
const GUARD: usize = 2;

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    // fixed chunking keeps the summation order independent of thread count
    const CHUNK: usize = 4096;
    if a.len() <= CHUNK {
        return a.iter().zip(b).map(|(x, y)| *x * *y).sum();
    }
    let parts: Vec<T> =
        a.par_chunks(CHUNK).zip(b.par_chunks(CHUNK)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| *p * *q).sum()).collect();
    parts.into_iter().sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

fn scale<T: Real>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Columns `Σ_i cols[i]·c[i·k + j]` for `j < k`.
fn combine<T: Real>(cols: &[Vec<T>], c: &[T], k: usize) -> Vec<Vec<T>> {
    let n = cols.first().map_or(0, Vec::len);
    (0..k)
        .into_par_iter()
        .map(|j| {
            let mut out = vec![T::zero(); n];
            for (i, col) in cols.iter().enumerate() {
                let coef = c[i * k + j];
                if coef != T::zero() {
                    axpy(coef, col, &mut out);
                }
            }
            out
        })
        .collect()
}

fn gram<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<T> {
    let m = a.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let vals: Vec<T> = pairs.par_iter().map(|&(i, j)| dot(&a[i], &b[j])).collect();
    let mut g = vec![T::zero(); m * m];
    for (&(i, j), v) in pairs.iter().zip(vals) {
        g[i * m + j] = v;
        g[j * m + i] = v;
    }
    g
}

/// Block of vectors with their images under `S − σ`. Folded quantities come
/// from `⟨x, (S − σ)² y⟩ = ⟨(S − σ)x, (S − σ)y⟩`, which avoids carrying
/// second images and squaring the condition number of the Gram matrix.
#[derive(Clone, Default)]
struct Block<T> {
    x: Vec<Vec<T>>,
    sx: Vec<Vec<T>>,
}

impl<T: Real> Block<T> {
    fn len(&self) -> usize {
        self.x.len()
    }

    fn from_vectors<O: ShiftedOperator<T>>(op: &O, x: Vec<Vec<T>>) -> Self {
        let sx = op.apply_many(&x);
        Self { x, sx }
    }

    fn refresh<O: ShiftedOperator<T>>(&mut self, op: &O) {
        *self = Self::from_vectors(op, std::mem::take(&mut self.x));
    }

    /// Orthogonalizes `(v, sv)` against the block and appends it unless it is
    /// numerically dependent.
    fn append(&mut self, mut v: Vec<T>, mut sv: Vec<T>) -> bool {
        let start = norm(&v);
        if !(start > T::zero()) {
            return false;
        }
        let mut left = start;
        // a second pass only when the first one cancelled heavily
        for _ in 0..2 {
            let before = left;
            let coef: Vec<T> = self.x.par_iter().map(|q| dot(q, &v)).collect();
            for (k, &c) in coef.iter().enumerate() {
                axpy(-c, &self.x[k], &mut v);
                axpy(-c, &self.sx[k], &mut sv);
            }
            left = norm(&v);
            if left > T::lit(0.5) * before {
                break;
            }
        }
        if left <= T::lit(1e-10) * start {
            return false;
        }
        let inv = left.recip();
        scale(inv, &mut v);
        scale(inv, &mut sv);
        self.x.push(v);
        self.sx.push(sv);
        true
    }

    fn combined(&self, c: &[T], k: usize) -> Self {
        Self { x: combine(&self.x, c, k), sx: combine(&self.sx, c, k) }
    }
}

fn random_block<T: Real, O: ShiftedOperator<T>>(op: &O, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let n = op.dim();
    let raw: Vec<Vec<T>> = (0..count).map(|_| (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect()).collect();
    op.precondition_many(&raw)
}

struct Unfolded<T> {
    values: Vec<T>,
    vectors: Vec<Vec<T>>,
    residuals: Vec<T>,
}

fn unfold<T: Real>(block: &Block<T>) -> Unfolded<T> {
    let b = block.len();
    let m = gram(&block.x, &block.sx);
    let (values, y) = symmetric_eigen(&m, b);
    let u = combine(&block.x, &y, b);
    let su = combine(&block.sx, &y, b);
    let residuals = (0..b)
        .into_par_iter()
        .map(|k| {
            let mut r = su[k].clone();
            axpy(-values[k], &u[k], &mut r);
            norm(&r)
        })
        .collect();
    Unfolded { values, vectors: u, residuals }
}

pub(crate) fn solve<T: Real, O: ShiftedOperator<T>>(
    op: &O,
    target: Target<T>,
    settings: &SolverSettings<T>,
) -> Result<Solution<T>, Failure<T>> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let (mut b, cap) = match target {
        Target::Window { max_count, .. } => {
            let cap = (max_count + GUARD).min(n);
            (settings.initial_block.max(GUARD + 1).min(cap), cap)
        }
        Target::Nearest { count } => {
            let b = (count + GUARD.max(count / 2)).min(n);
            (b, b)
        }
    };
    let mut x = Block::default();
    {
        let start = Block::from_vectors(op, random_block(op, b, &mut rng));
        for k in 0..start.len() {
            x.append(start.x[k].clone(), start.sx[k].clone());
        }
    }
    let mut p: Block<T> = Block::default();
    let mut last_residuals = Vec::new();
    for it in 0..settings.max_iterations {
        if it > 0 && it % settings.refresh_every == 0 {
            x.refresh(op);
            p.refresh(op);
        }
        let bx = x.len();
        // folded Ritz vectors within span(X)
        let (theta, c) = symmetric_eigen(&gram(&x.sx, &x.sx), bx);
        x = x.combined(&c, bx);

        let unfolded = unfold(&x);
        let mut order: Vec<usize> = (0..bx).collect();
        order.sort_by(|&i, &j| unfolded.values[i].abs().partial_cmp(&unfolded.values[j].abs()).unwrap());
        let selected: Option<Vec<usize>> = match target {
            Target::Window { half_width, max_count } => {
                let edge = half_width * (T::one() + T::lit(WINDOW_SLACK));
                let inside: Vec<usize> = order.iter().copied().filter(|&k| unfolded.values[k].abs() <= edge).collect();
                if inside.len() + GUARD > bx {
                    if bx >= cap {
                        if inside.len() > max_count {
                            return Err(Failure::Overflow);
                        }
                    } else {
                        // window may hold more eigenvalues than the block: grow it
                        b = (2 * b).min(cap);
                        let extra = Block::from_vectors(op, random_block(op, b - bx, &mut rng));
                        for k in 0..extra.len() {
                            x.append(extra.x[k].clone(), extra.sx[k].clone());
                        }
                        p = Block::default();
                        continue;
                    }
                }
                last_residuals = inside.iter().map(|&k| unfolded.residuals[k]).collect();
                let guard = order.iter().copied().find(|&k| unfolded.values[k].abs() > edge);
                let settled = guard.is_some_and(|g| {
                    unfolded.residuals[g] <= settings.guard_tolerance
                        && unfolded.values[g].abs() - unfolded.residuals[g] > half_width
                });
                let converged = inside.iter().all(|&k| unfolded.residuals[k] <= settings.tolerance);
                (settled && converged && inside.len() + GUARD <= bx).then_some(inside)
            }
            Target::Nearest { count } => {
                let want = &order[..count.min(bx)];
                last_residuals = want.iter().map(|&k| unfolded.residuals[k]).collect();
                let converged = want.iter().all(|&k| unfolded.residuals[k] <= settings.tolerance);
                let settled = order.get(count).is_none_or(|&g| unfolded.residuals[g] <= settings.guard_tolerance);
                (converged && settled).then(|| want.to_vec())
            }
        };
        if let Some(mut keep) = selected {
            keep.sort_by(|&i, &j| unfolded.values[i].partial_cmp(&unfolded.values[j]).unwrap());
            return Ok(Solution {
                values: keep.iter().map(|&k| unfolded.values[k]).collect(),
                vectors: keep.iter().map(|&k| unfolded.vectors[k].clone()).collect(),
                residuals: keep.iter().map(|&k| unfolded.residuals[k]).collect(),
            });
        }

        // preconditioned folded residuals
        let mut r = op.apply_many(&x.sx);
        r.par_iter_mut().zip(&x.x).zip(&theta).for_each(|((r, x), &t)| axpy(-t, x, r));
        let w = Block::from_vectors(op, op.precondition_many(&r));

        let mut basis = x.clone();
        for k in 0..w.len() {
            basis.append(w.x[k].clone(), w.sx[k].clone());
        }
        for k in 0..p.len() {
            basis.append(p.x[k].clone(), p.sx[k].clone());
        }
        let m = basis.len();
        let (_, c) = symmetric_eigen(&gram(&basis.sx, &basis.sx), m);
        let keep = bx.min(m);
        let mut cx = vec![T::zero(); m * keep];
        for i in 0..m {
            for j in 0..keep {
                cx[i * keep + j] = c[i * m + j];
            }
        }
        let new_x = basis.combined(&cx, keep);
        // search direction: the part of the new block outside span(X)
        let tail = Block { x: basis.x[bx..].to_vec(), sx: basis.sx[bx..].to_vec() };
        p = tail.combined(&cx[bx * keep..], keep);
        x = new_x;
    }
    Err(Failure::NotConverged { iterations: settings.max_iterations, residuals: last_residuals })
}
