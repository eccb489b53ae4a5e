//! Scalar abstraction shared by every numerical module.
//!
//! All of the math in this crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. FFTs are reached through the trait rather
//! than through a `rustfft::FftNum` bound so that generic code only ever sees
//! one `abs`/`signum` (from `Float`).

use std::cell::RefCell;
use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftPlanner;

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, rounding when `Self` is narrower.
    fn lit(x: f64) -> Self;

    /// Converts a count or index.
    fn from_usize_exact(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64;

    /// Unnormalized forward DFT, `X_m = Σ_n x_n e^{-2πi nm/N}`, in place, of
    /// every consecutive chunk of length `len`.
    fn fft_forward(buf: &mut [Complex<Self>], len: usize);

    /// Unnormalized inverse DFT, `x_n = Σ_m X_m e^{2πi nm/N}`, chunkwise.
    fn fft_inverse(buf: &mut [Complex<Self>], len: usize);
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            fn fft_forward(buf: &mut [Complex<Self>], len: usize) {
                thread_local! {
                    static PLANNER: RefCell<FftPlanner<$t>> = RefCell::new(FftPlanner::new());
                }
                let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len));
                plan.process(buf);
            }

            fn fft_inverse(buf: &mut [Complex<Self>], len: usize) {
                thread_local! {
                    static PLANNER: RefCell<FftPlanner<$t>> = RefCell::new(FftPlanner::new());
                }
                let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len));
                plan.process(buf);
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Forward 2D DFT of a row-major `n × n` array (unnormalized).
pub(crate) fn fft2_forward<T: Real>(data: &mut [Complex<T>], n: usize) {
    fft2(data, n, T::fft_forward);
}

/// Inverse 2D DFT of a row-major `n × n` array (unnormalized).
pub(crate) fn fft2_inverse<T: Real>(data: &mut [Complex<T>], n: usize) {
    fft2(data, n, T::fft_inverse);
}

fn fft2<T: Real>(data: &mut [Complex<T>], n: usize, pass: fn(&mut [Complex<T>], usize)) {
    debug_assert_eq!(data.len(), n * n);
    pass(data, n);
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); n * n];
    transpose(data, &mut scratch, n);
    pass(&mut scratch, n);
    transpose(&scratch, data, n);
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], n: usize) {
    const TILE: usize = 32;
    for bi in (0..n).step_by(TILE) {
        for bj in (0..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                for j in bj..(bj + TILE).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

/// Smooth transition `S` on `[0, 1]`: `S(0) = 0`, `S(1) = 1`, every derivative
/// vanishes at both ends, and `S(τ) + S(1 − τ) = 1`.
pub fn smooth_step<T: Real>(tau: T) -> T {
    fn flat<T: Real>(t: T) -> T {
        if t > T::zero() {
            (-t.recip()).exp()
        } else {
            T::zero()
        }
    }
    if tau <= T::zero() {
        return T::zero();
    }
    if tau >= T::one() {
        return T::one();
    }
    let a = flat(tau);
    let b = flat(T::one() - tau);
    a / (a + b)
}
