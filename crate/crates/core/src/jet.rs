//! Truncated Taylor series ("jets") used to differentiate closed-form
//! expressions to high order without finite differences.
//!
//! A jet stores `c[k] = f^{(k)}(x0) / k!` for `k <= order`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// Coefficient field of a jet: the real scalar itself or its complexification.
pub trait JetScalar<T: Real>:
    Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + std::ops::Div<Output = Self>
    + Send
    + Sync
    + std::fmt::Debug
{
    fn from_real(x: T) -> Self;
    fn scale(self, r: T) -> Self;
    fn exp_(self) -> Self;
    fn ln_(self) -> Self;
    fn re_part(self) -> T;
    fn modulus(self) -> T;
}

impl<T: Real> JetScalar<T> for T {
    #[inline]
    fn from_real(x: T) -> Self {
        x
    }
    #[inline]
    fn scale(self, r: T) -> Self {
        self * r
    }
    #[inline]
    fn exp_(self) -> Self {
        self.exp()
    }
    #[inline]
    fn ln_(self) -> Self {
        self.ln()
    }
    #[inline]
    fn re_part(self) -> T {
        self
    }
    #[inline]
    fn modulus(self) -> T {
        self.abs()
    }
}

impl<T: Real> JetScalar<T> for Complex<T> {
    #[inline]
    fn from_real(x: T) -> Self {
        Complex::new(x, T::zero())
    }
    #[inline]
    fn scale(self, r: T) -> Self {
        self * r
    }
    #[inline]
    fn exp_(self) -> Self {
        self.exp()
    }
    #[inline]
    fn ln_(self) -> Self {
        self.ln()
    }
    #[inline]
    fn re_part(self) -> T {
        self.re
    }
    #[inline]
    fn modulus(self) -> T {
        self.norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<S> {
    pub c: Vec<S>,
}

impl<S> Jet<S> {
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }
}

impl<S: Copy + Zero + One> Jet<S> {
    pub fn constant(v: S, order: usize) -> Self {
        let mut c = vec![S::zero(); order + 1];
        c[0] = v;
        Jet { c }
    }

    /// The identity map expanded at `x0`.
    pub fn variable(x0: S, order: usize) -> Self {
        let mut c = vec![S::zero(); order + 1];
        c[0] = x0;
        if order >= 1 {
            c[1] = S::one();
        }
        Jet { c }
    }

    pub fn zero(order: usize) -> Self {
        Jet { c: vec![S::zero(); order + 1] }
    }

    pub fn value(&self) -> S {
        self.c[0]
    }
}

impl<S> Jet<S> {
    /// `f^{(k)}(x0)` recovered from the stored Taylor coefficient.
    pub fn derivative<T: Real>(&self, k: usize) -> S
    where
        S: JetScalar<T>,
    {
        let mut f = T::one();
        for j in 2..=k {
            f = f * T::from_usize_lossy(j);
        }
        self.c[k].scale(f)
    }

    pub fn derivatives<T: Real>(&self) -> Vec<S>
    where
        S: JetScalar<T>,
    {
        let mut out = Vec::with_capacity(self.c.len());
        let mut f = T::one();
        for (k, &ck) in self.c.iter().enumerate() {
            if k >= 2 {
                f = f * T::from_usize_lossy(k);
            }
            out.push(ck.scale(f));
        }
        out
    }

    pub fn map_scale<T: Real>(&self, r: T) -> Self
    where
        S: JetScalar<T>,
    {
        Jet { c: self.c.iter().map(|&v| v.scale(r)).collect() }
    }

    pub fn add_const<T: Real>(&self, v: S) -> Self
    where
        S: JetScalar<T>,
    {
        let mut c = self.c.clone();
        c[0] = c[0] + v;
        Jet { c }
    }

    pub fn mul_jet<T: Real>(&self, o: &Self) -> Self
    where
        S: JetScalar<T>,
    {
        let n = self.c.len().min(o.c.len());
        let mut c = vec![S::zero(); n];
        for k in 0..n {
            let mut acc = S::zero();
            for i in 0..=k {
                acc = acc + self.c[i] * o.c[k - i];
            }
            c[k] = acc;
        }
        Jet { c }
    }

    pub fn recip<T: Real>(&self) -> Self
    where
        S: JetScalar<T>,
    {
        let n = self.c.len();
        let inv0 = S::one() / self.c[0];
        let mut h = vec![S::zero(); n];
        h[0] = inv0;
        for k in 1..n {
            let mut acc = S::zero();
            for i in 1..=k {
                acc = acc + self.c[i] * h[k - i];
            }
            h[k] = -(acc * inv0);
        }
        Jet { c: h }
    }

    pub fn div_jet<T: Real>(&self, o: &Self) -> Self
    where
        S: JetScalar<T>,
    {
        self.mul_jet(&o.recip())
    }

    pub fn exp<T: Real>(&self) -> Self
    where
        S: JetScalar<T>,
    {
        let n = self.c.len();
        let mut h = vec![S::zero(); n];
        h[0] = self.c[0].exp_();
        for k in 1..n {
            let mut acc = S::zero();
            for i in 1..=k {
                acc = acc + self.c[i].scale(T::from_usize_lossy(i)) * h[k - i];
            }
            h[k] = acc.scale(T::one() / T::from_usize_lossy(k));
        }
        Jet { c: h }
    }

    pub fn ln<T: Real>(&self) -> Self
    where
        S: JetScalar<T>,
    {
        let n = self.c.len();
        let g0 = self.c[0];
        let mut h = vec![S::zero(); n];
        h[0] = g0.ln_();
        for k in 1..n {
            let mut acc = S::zero();
            for i in 1..k {
                acc = acc + h[i].scale(T::from_usize_lossy(i)) * self.c[k - i];
            }
            h[k] = (self.c[k] - acc.scale(T::one() / T::from_usize_lossy(k))) / g0;
        }
        Jet { c: h }
    }

    pub fn powf<T: Real>(&self, a: T) -> Self
    where
        S: JetScalar<T>,
    {
        self.ln().map_scale(a).exp()
    }

    /// Evaluates the polynomial `sum coeffs[k] * self^k` by Horner's rule.
    pub fn compose_poly<T: Real>(&self, coeffs: &[S]) -> Self
    where
        S: JetScalar<T>,
    {
        let n = self.c.len();
        let mut acc = Jet::zero(n - 1);
        for &a in coeffs.iter().rev() {
            acc = acc.mul_jet(self).add_const(a);
        }
        acc
    }
}

impl<T: Real> Jet<T> {
    pub fn to_complex(&self) -> Jet<Complex<T>> {
        Jet { c: self.c.iter().map(|&v| Complex::new(v, T::zero())).collect() }
    }
}

impl<S: Copy + Add<Output = S>> Add for &Jet<S> {
    type Output = Jet<S>;
    fn add(self, o: &Jet<S>) -> Jet<S> {
        Jet { c: self.c.iter().zip(&o.c).map(|(&a, &b)| a + b).collect() }
    }
}

impl<S: Copy + Sub<Output = S>> Sub for &Jet<S> {
    type Output = Jet<S>;
    fn sub(self, o: &Jet<S>) -> Jet<S> {
        Jet { c: self.c.iter().zip(&o.c).map(|(&a, &b)| a - b).collect() }
    }
}

impl<S: Copy + Neg<Output = S>> Neg for &Jet<S> {
    type Output = Jet<S>;
    fn neg(self) -> Jet<S> {
        Jet { c: self.c.iter().map(|&a| -a).collect() }
    }
}

/// Jet of `exp(-1/tau)` for a real jet `tau` with `tau.value() > 0`.
///
/// Returns the zero jet once the exponent drops below about `-700`: the
/// coefficients of `1/tau` can overflow there while the prefactor underflows.
pub fn exp_neg_recip<T: Real>(tau: &Jet<T>) -> Jet<T> {
    let t0 = tau.value();
    if t0 <= T::zero() || T::one() / t0 > T::lit(700.0) {
        return Jet::zero(tau.order());
    }
    (-&tau.recip()).exp()
}

/// Smooth monotone step: 0 for `tau <= 0`, 1 for `tau >= 1`.
pub fn smooth_step<T: Real>(tau: &Jet<T>) -> Jet<T> {
    let order = tau.order();
    let t0 = tau.value();
    if t0 <= T::zero() {
        return Jet::zero(order);
    }
    if t0 >= T::one() {
        return Jet::constant(T::one(), order);
    }
    let a = exp_neg_recip(tau);
    let one_minus = (-tau).add_const(T::one());
    let b = exp_neg_recip(&one_minus);
    let denom = &a + &b;
    a.div_jet(&denom)
}
