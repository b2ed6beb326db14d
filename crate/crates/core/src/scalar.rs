//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar. Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `log(k!)` via a running sum, exact enough for the orders used here.
pub fn ln_factorial<T: Real>(k: usize) -> T {
    let mut acc = 0.0f64;
    for j in 2..=k {
        acc += (j as f64).ln();
    }
    T::lit(acc)
}

/// `[log 0!, log 1!, ..., log k!]`, accumulated in `f64`.
pub fn ln_factorials<T: Real>(k: usize) -> Vec<T> {
    let mut acc = 0.0f64;
    let mut out = Vec::with_capacity(k + 1);
    out.push(T::zero());
    for j in 1..=k {
        if j >= 2 {
            acc += (j as f64).ln();
        }
        out.push(T::lit(acc));
    }
    out
}

/// `e^{i theta}`
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Log-sum-exp guard used where tiny magnitudes must not underflow to `-inf` silently.
#[inline]
pub fn safe_ln<T: Real>(x: T) -> T {
    if x > T::zero() {
        x.ln()
    } else {
        T::neg_infinity()
    }
}
