//! Gauss-Legendre, adaptive Gauss-Kronrod and trapezoid rules over real or
//! complex integrands.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Values a quadrature can accumulate.
pub trait Integrand<T: Real>:
    Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> + Send + Sync
{
    fn magnitude(self) -> T;
}

impl<T: Real> Integrand<T> for T {
    #[inline]
    fn magnitude(self) -> T {
        self.abs()
    }
}

impl<T: Real> Integrand<T> for Complex<T> {
    #[inline]
    fn magnitude(self) -> T {
        self.norm()
    }
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton in f64.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[n - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal pieces.
    pub fn integrate<V, F>(&self, f: F, a: T, b: T, panels: usize) -> V
    where
        V: Integrand<T>,
        F: Fn(T) -> V,
    {
        self.integrate_with_scale(f, a, b, panels).0
    }

    /// Like [`integrate`](Self::integrate) but also returns `sum w |f|`, the
    /// absolute scale that bounds rounding error.
    pub fn integrate_with_scale<V, F>(&self, f: F, a: T, b: T, panels: usize) -> (V, T)
    where
        V: Integrand<T>,
        F: Fn(T) -> V,
    {
        let panels = panels.max(1);
        let h = (b - a) / T::from_usize_lossy(panels);
        let half = h * T::lit(0.5);
        let mut acc = V::zero();
        let mut scale = T::zero();
        for p in 0..panels {
            let mid = a + h * (T::from_usize_lossy(p) + T::lit(0.5));
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let v = f(mid + half * *x);
                acc = acc + v * (*w * half);
                scale += v.magnitude() * *w * half.abs();
            }
        }
        (acc, scale)
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Estimate<V, T> {
    pub value: V,
    pub error: T,
    /// Integral of `|f|`, useful as a rounding-noise scale.
    pub abs: T,
}

fn gk15<T: Real, V: Integrand<T>, F: Fn(T) -> V>(f: &F, a: T, b: T) -> (V, T, T) {
    let c = (a + b) * T::lit(0.5);
    let h = (b - a) * T::lit(0.5);
    let fc = f(c);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    let mut abs = fc.magnitude() * T::lit(WGK[7]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        let s = f1 + f2;
        kron = kron + s * T::lit(WGK[j]);
        abs += (f1.magnitude() + f2.magnitude()) * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    let val = kron * h;
    let err = ((kron - gauss) * h).magnitude();
    (val, err, abs * h.abs())
}

struct Piece<T, V> {
    a: T,
    b: T,
    val: V,
    err: T,
    abs: T,
}

impl<T: Real, V> PartialEq for Piece<T, V> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<T: Real, V> Eq for Piece<T, V> {}
impl<T: Real, V> PartialOrd for Piece<T, V> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real, V> Ord for Piece<T, V> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.partial_cmp(&o.err).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Adaptive G7-K15 with global bisection of the worst piece.
pub fn adaptive<T, V, F>(f: F, a: T, b: T, abs_tol: T, rel_tol: T, max_pieces: usize) -> Result<Estimate<V, T>>
where
    T: Real,
    V: Integrand<T>,
    F: Fn(T) -> V,
{
    adaptive_from(f, &[a, b], abs_tol, rel_tol, max_pieces)
}

/// Adaptive integration starting from the given breakpoints (sorted).
pub fn adaptive_from<T, V, F>(f: F, breaks: &[T], abs_tol: T, rel_tol: T, max_pieces: usize) -> Result<Estimate<V, T>>
where
    T: Real,
    V: Integrand<T>,
    F: Fn(T) -> V,
{
    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut err = T::zero();
    let mut abs = T::zero();
    for w in breaks.windows(2) {
        let (v, e, s) = gk15(&f, w[0], w[1]);
        total = total + v;
        err += e;
        abs += s;
        heap.push(Piece { a: w[0], b: w[1], val: v, err: e, abs: s });
    }
    let eps = T::epsilon() * T::lit(50.0);
    loop {
        let tol = abs_tol.max(rel_tol * total.magnitude());
        if err <= tol || err <= eps * abs {
            return Ok(Estimate { value: total, error: err, abs });
        }
        if heap.len() >= max_pieces {
            return Err(Error::QuadratureNonConvergent(format!(
                "error {:e} above tolerance {:e} after {} pieces",
                err.to_f64_lossy(),
                tol.to_f64_lossy(),
                heap.len()
            )));
        }
        let p = heap.pop().expect("nonempty");
        let m = (p.a + p.b) * T::lit(0.5);
        let (v1, e1, s1) = gk15(&f, p.a, m);
        let (v2, e2, s2) = gk15(&f, m, p.b);
        total = total - p.val + v1 + v2;
        err = err - p.err + e1 + e2;
        abs = abs - p.abs + s1 + s2;
        heap.push(Piece { a: p.a, b: m, val: v1, err: e1, abs: s1 });
        heap.push(Piece { a: m, b: p.b, val: v2, err: e2, abs: s2 });
        // Re-sum occasionally to keep the running totals honest.
        if heap.len() % 64 == 0 {
            total = heap.iter().fold(V::zero(), |acc, q| acc + q.val);
            err = heap.iter().fold(T::zero(), |acc, q| acc + q.err);
        }
    }
}

/// Composite trapezoid on uniformly spaced samples.
pub fn trapezoid<T: Real, V: Integrand<T>>(values: &[V], h: T) -> V {
    let n = values.len();
    if n < 2 {
        return V::zero();
    }
    let mut acc = V::zero();
    for v in &values[1..n - 1] {
        acc = acc + *v;
    }
    acc = acc + (values[0] + values[n - 1]) * T::lit(0.5);
    acc * h
}
