//! Test distributions with exact pairing rules, test functions and windows.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::jet::{exp_neg_recip, smooth_step, Jet};
use crate::quadrature::{adaptive_from, GaussLegendre};
use crate::scalar::Real;

/// Highest derivative order served by [`gevrey_flat_derivatives`].
pub const GEVREY_FLAT_MAX_ORDER: usize = 40;

/// Anything a distribution can be paired with: smooth, compactly supported,
/// possibly complex-valued.
pub trait Tester<T: Real>: Sync {
    fn value(&self, x: T) -> Complex<T>;
    /// Taylor jet of order `order` at `x`.
    fn jet(&self, x: T, order: usize) -> Jet<Complex<T>>;
    /// Closed interval outside which the tester vanishes.
    fn support(&self) -> (T, T);
    /// Largest angular frequency present; drives panel counts and the
    /// sampled-grid resolution guard. Zero selects adaptive quadrature.
    fn max_frequency(&self) -> T {
        T::zero()
    }
}

/// `amplitude * poly(x - center) * exp(1 - 1/(1 - u^2))`, `u = (x - center)/radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction<T> {
    pub center: T,
    pub radius: T,
    pub amplitude: T,
    /// Coefficients of the polynomial factor in powers of `x - center`.
    pub poly: Vec<T>,
}

impl<T: Real> TestFunction<T> {
    pub fn bump(center: T, radius: T) -> Self {
        assert!(radius > T::zero(), "radius must be positive");
        TestFunction { center, radius, amplitude: T::one(), poly: vec![T::one()] }
    }

    pub fn scaled(mut self, amplitude: T) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_poly(mut self, poly: Vec<T>) -> Self {
        self.poly = poly;
        self
    }

    pub fn real_jet(&self, x: T, order: usize) -> Jet<T> {
        let mut u = Jet::variable((x - self.center) / self.radius, order);
        if order >= 1 {
            u.c[1] = T::one() / self.radius;
        }
        let w = (&Jet::constant(T::one(), order)) - &u.mul_jet(&u);
        if w.value() <= T::zero() {
            return Jet::zero(order);
        }
        let b = exp_neg_recip(&w).map_scale(T::E());
        let shift = Jet::variable(x - self.center, order);
        let p = shift.compose_poly(&self.poly);
        p.mul_jet(&b).map_scale(self.amplitude)
    }

    pub fn eval(&self, x: T) -> T {
        self.real_jet(x, 0).value()
    }

    pub fn derivative(&self, x: T, d: usize) -> T {
        self.real_jet(x, d).derivative(d)
    }

    /// Sup norm on a dense grid.
    pub fn sup_norm(&self) -> T {
        let n = 4001;
        let (a, b) = (self.center - self.radius, self.center + self.radius);
        (0..n)
            .map(|i| self.eval(a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)).abs())
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Tester<T> for TestFunction<T> {
    fn value(&self, x: T) -> Complex<T> {
        Complex::new(self.eval(x), T::zero())
    }
    fn jet(&self, x: T, order: usize) -> Jet<Complex<T>> {
        self.real_jet(x, order).to_complex()
    }
    fn support(&self) -> (T, T) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Smooth window: 1 on `|x - center| <= plateau`, 0 beyond `radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window<T> {
    pub center: T,
    pub plateau: T,
    pub radius: T,
}

impl<T: Real> Window<T> {
    pub fn new(center: T, plateau: T, radius: T) -> Result<Self> {
        if !(plateau > T::zero() && radius > plateau) {
            return Err(invalid("window needs 0 < plateau < radius"));
        }
        Ok(Window { center, plateau, radius })
    }

    pub fn jet(&self, x: T, order: usize) -> Jet<T> {
        let r = x - self.center;
        let width = self.radius - self.plateau;
        let (sign, dist) = if r >= T::zero() { (T::one(), r) } else { (-T::one(), -r) };
        if dist <= self.plateau {
            return Jet::constant(T::one(), order);
        }
        if dist >= self.radius {
            return Jet::zero(order);
        }
        let mut tau = Jet::variable((dist - self.plateau) / width, order);
        if order >= 1 {
            tau.c[1] = sign / width;
        }
        let s = smooth_step(&tau);
        (&Jet::constant(T::one(), order)) - &s
    }

    pub fn eval(&self, x: T) -> T {
        self.jet(x, 0).value()
    }

    pub fn support(&self) -> (T, T) {
        (self.center - self.radius, self.center + self.radius)
    }

    pub fn shifted(&self, center: T) -> Self {
        Window { center, ..*self }
    }
}

/// Closed-form function of one variable, paired by quadrature.
#[derive(Clone)]
pub struct NamedFunction<T> {
    pub name: String,
    pub f: Arc<dyn Fn(T) -> Complex<T> + Send + Sync>,
    /// Points where `f` or a derivative jumps; quadrature splits there.
    pub breakpoints: Vec<T>,
    pub real: bool,
}

impl<T> fmt::Debug for NamedFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NamedFunction({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum Kind<T> {
    /// `delta^{(order)}` at `y`.
    Atom { y: T, order: usize },
    /// `p.v. 1/(x - y)`.
    PrincipalValue { y: T },
    /// `H(x - y)`.
    Heaviside { y: T },
    /// Uniform samples `values[i]` at `x0 + i h`.
    Sampled { x0: T, h: T, values: Vec<T>, window_radius: T },
    /// `exp(-(x - y)^{-1/s})` for `x > y`, zero otherwise.
    GevreyFlat { s: T, y: T },
    Function(NamedFunction<T>),
    Combination(Vec<(Complex<T>, Distribution<T>)>),
}

#[derive(Clone, Debug)]
pub struct Distribution<T> {
    pub kind: Kind<T>,
    /// Known singular support. Test harness metadata; estimators never read it.
    pub singular_support: Vec<T>,
}

impl<T: Real> Distribution<T> {
    pub fn delta(y: T) -> Self {
        Self::delta_derivative(y, 0)
    }

    pub fn delta_derivative(y: T, order: usize) -> Self {
        Distribution { kind: Kind::Atom { y, order }, singular_support: vec![y] }
    }

    pub fn principal_value(y: T) -> Self {
        Distribution { kind: Kind::PrincipalValue { y }, singular_support: vec![y] }
    }

    pub fn heaviside(y: T) -> Self {
        Distribution { kind: Kind::Heaviside { y }, singular_support: vec![y] }
    }

    pub fn gevrey_flat(s: T) -> Result<Self> {
        Self::gevrey_flat_at(s, T::zero())
    }

    pub fn gevrey_flat_at(s: T, y: T) -> Result<Self> {
        if !(s > T::zero()) {
            return Err(invalid("GevreyFlat needs s > 0"));
        }
        Ok(Distribution { kind: Kind::GevreyFlat { s, y }, singular_support: vec![y] })
    }

    pub fn sampled(x0: T, h: T, values: Vec<T>, window_radius: T) -> Result<Self> {
        if !(h > T::zero()) || values.len() < 2 {
            return Err(invalid("sampled distribution needs h > 0 and two samples"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sampled values must be finite"));
        }
        if !(window_radius > T::zero()) {
            return Err(invalid("window radius must be positive"));
        }
        Ok(Distribution { kind: Kind::Sampled { x0, h, values, window_radius }, singular_support: vec![] })
    }

    /// Samples `f` on `n` uniform points of `[a, b]`.
    pub fn sample_fn(f: impl Fn(T) -> T, a: T, b: T, n: usize) -> Result<Self> {
        let h = (b - a) / T::from_usize_lossy(n - 1);
        let values = (0..n).map(|i| f(a + h * T::from_usize_lossy(i))).collect();
        Self::sampled(a, h, values, (b - a) * T::lit(0.5))
    }

    pub fn function(
        name: impl Into<String>,
        f: impl Fn(T) -> Complex<T> + Send + Sync + 'static,
        breakpoints: Vec<T>,
    ) -> Self {
        let singular_support = breakpoints.clone();
        Distribution {
            kind: Kind::Function(NamedFunction { name: name.into(), f: Arc::new(f), breakpoints, real: false }),
            singular_support,
        }
    }

    pub fn real_function(name: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static, breakpoints: Vec<T>) -> Self {
        let mut d = Self::function(name, move |x| Complex::new(f(x), T::zero()), breakpoints);
        if let Kind::Function(nf) = &mut d.kind {
            nf.real = true;
        }
        d
    }

    pub fn gaussian() -> Self {
        Self::real_function("gaussian", |x: T| (-x * x).exp(), vec![])
    }

    pub fn abs() -> Self {
        Self::real_function("abs", |x: T| x.abs(), vec![T::zero()])
    }

    pub fn one() -> Self {
        Self::real_function("one", |_x: T| T::one(), vec![])
    }

    pub fn zero() -> Self {
        Distribution { kind: Kind::Combination(vec![]), singular_support: vec![] }
    }

    /// Flat linear combination; nested combinations are expanded.
    pub fn combination(parts: Vec<(Complex<T>, Distribution<T>)>) -> Self {
        let mut flat = Vec::new();
        let mut sing = Vec::new();
        for (c, d) in parts {
            match d.kind {
                Kind::Combination(inner) => {
                    for (c2, d2) in inner {
                        sing.extend(d2.singular_support.iter().copied());
                        flat.push((c * c2, d2));
                    }
                }
                _ => {
                    sing.extend(d.singular_support.iter().copied());
                    flat.push((c, d));
                }
            }
        }
        sing.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sing.dedup();
        Distribution { kind: Kind::Combination(flat), singular_support: sing }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::combination(vec![(c, self.clone())])
    }

    /// `1/(x + i0)` for `plus`, `1/(x - i0)` otherwise:
    /// `p.v. 1/x -/+ i pi delta`.
    pub fn boundary_value_atom(plus: bool) -> Self {
        let s = if plus { -T::one() } else { T::one() };
        Self::combination(vec![
            (Complex::one(), Self::principal_value(T::zero())),
            (Complex::new(T::zero(), s * T::PI()), Self::delta(T::zero())),
        ])
    }

    pub fn is_real(&self) -> bool {
        match &self.kind {
            Kind::Combination(parts) => parts.iter().all(|(c, d)| c.im == T::zero() && d.is_real()),
            Kind::Function(nf) => nf.real,
            _ => true,
        }
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        match &self.kind {
            Kind::Combination(parts) => Distribution {
                kind: Kind::Combination(parts.iter().map(|(c, d)| (c.conj(), d.conj())).collect()),
                singular_support: self.singular_support.clone(),
            },
            Kind::Function(nf) if !nf.real => {
                let f = nf.f.clone();
                Distribution {
                    kind: Kind::Function(NamedFunction {
                        name: format!("conj({})", nf.name),
                        f: Arc::new(move |x| f(x).conj()),
                        breakpoints: nf.breakpoints.clone(),
                        real: false,
                    }),
                    singular_support: self.singular_support.clone(),
                }
            }
            _ => self.clone(),
        }
    }

    /// Pullback under `F(x) = a x + b`, `a != 0`.
    pub fn pullback_affine(&self, a: T, b: T) -> Result<Self> {
        if a == T::zero() {
            return Err(Error::SingularJacobian(vec![]));
        }
        let inv = |y: T| (y - b) / a;
        let out = match &self.kind {
            Kind::Atom { y, order } => {
                // delta^{(d)}(a x + b) = a^{-d} |a|^{-1} delta^{(d)}_{(y-b)/a}
                let c = a.powi(-(*order as i32)) / a.abs();
                Self::delta_derivative(inv(*y), *order).scale(Complex::new(c, T::zero()))
            }
            Kind::PrincipalValue { y } => {
                Self::principal_value(inv(*y)).scale(Complex::new(T::one() / a, T::zero()))
            }
            Kind::Heaviside { y } => {
                if a > T::zero() {
                    Self::heaviside(inv(*y))
                } else {
                    Self::combination(vec![
                        (Complex::one(), Self::one()),
                        (-Complex::<T>::one(), Self::heaviside(inv(*y))),
                    ])
                }
            }
            Kind::Function(nf) => {
                let f = nf.f.clone();
                let bps = nf.breakpoints.iter().map(|&y| inv(y)).collect();
                let mut d = Self::function(format!("{}∘affine", nf.name), move |x| f(a * x + b), bps);
                if let Kind::Function(g) = &mut d.kind {
                    g.real = nf.real;
                }
                d
            }
            Kind::Combination(parts) => Self::combination(
                parts.iter().map(|(c, d)| Ok((*c, d.pullback_affine(a, b)?))).collect::<Result<Vec<_>>>()?,
            ),
            Kind::Sampled { .. } | Kind::GevreyFlat { .. } => {
                return Err(Error::Unsupported("affine pullback of sampled or GevreyFlat inputs".into()))
            }
        };
        Ok(out)
    }

    /// Pointwise values of the function part (atoms excluded), used by
    /// quadrature paths.
    fn point_value(&self, x: T) -> Complex<T> {
        match &self.kind {
            Kind::Heaviside { y } => {
                if x >= *y {
                    Complex::one()
                } else {
                    Complex::zero()
                }
            }
            Kind::GevreyFlat { s, y } => Complex::new(gevrey_flat_value(*s, x - *y), T::zero()),
            Kind::Function(nf) => (nf.f)(x),
            _ => Complex::zero(),
        }
    }

    /// `<u, phi>` with default quadrature settings.
    pub fn pair(&self, phi: &impl Tester<T>) -> Result<Complex<T>> {
        Ok(self.pair_with_scale(phi)?.0)
    }

    /// Pairing plus an absolute integrand scale (sum of |terms|), which
    /// bounds the rounding noise of the returned value.
    pub fn pair_with_scale(&self, phi: &impl Tester<T>) -> Result<(Complex<T>, T)> {
        let (lo, hi) = phi.support();
        let freq = phi.max_frequency();
        match &self.kind {
            Kind::Atom { y, order } => {
                let v = phi.jet(*y, *order).derivative(*order);
                let sign = if order % 2 == 0 { T::one() } else { -T::one() };
                let v = v * sign;
                Ok((v, v.norm()))
            }
            Kind::PrincipalValue { y } => {
                let r_max = (hi - *y).abs().max((*y - lo).abs());
                if r_max <= T::zero() {
                    return Ok((Complex::zero(), T::zero()));
                }
                let g = |r: T| (phi.value(*y + r) - phi.value(*y - r)) / r;
                integrate(g, &[T::zero(), r_max], freq)
            }
            Kind::Heaviside { y } => {
                let a = lo.max(*y);
                if a >= hi {
                    return Ok((Complex::zero(), T::zero()));
                }
                integrate(|x| phi.value(x), &[a, hi], freq)
            }
            Kind::GevreyFlat { s, y } => {
                let a = lo.max(*y);
                if a >= hi {
                    return Ok((Complex::zero(), T::zero()));
                }
                let s = *s;
                let y = *y;
                integrate(|x| phi.value(x) * gevrey_flat_value(s, x - y), &[a, hi], freq)
            }
            Kind::Function(nf) => {
                let mut breaks = vec![lo];
                for &b in &nf.breakpoints {
                    if b > lo && b < hi {
                        breaks.push(b);
                    }
                }
                breaks.push(hi);
                integrate(|x| phi.value(x) * (nf.f)(x), &breaks, freq)
            }
            Kind::Sampled { x0, h, values, .. } => {
                if freq > T::zero() {
                    let guard = T::PI() / (T::lit(4.0) * freq);
                    if *h > guard {
                        return Err(Error::UnderResolved { spacing: h.to_f64_lossy(), guard: guard.to_f64_lossy() });
                    }
                }
                let n = values.len();
                let mut acc = Complex::zero();
                let mut scale = T::zero();
                for (i, &v) in values.iter().enumerate() {
                    let x = *x0 + *h * T::from_usize_lossy(i);
                    if x < lo || x > hi {
                        continue;
                    }
                    let w = if i == 0 || i == n - 1 { T::lit(0.5) } else { T::one() };
                    let term = phi.value(x) * (v * w * *h);
                    acc = acc + term;
                    scale += term.norm();
                }
                Ok((acc, scale))
            }
            Kind::Combination(parts) => {
                let mut acc = Complex::zero();
                let mut scale = T::zero();
                for (c, d) in parts {
                    let (v, s) = d.pair_with_scale(phi)?;
                    acc = acc + *c * v;
                    scale += c.norm() * s;
                }
                Ok((acc, scale))
            }
        }
    }

    /// Function values (without atoms) for plotting and direct sampling.
    pub fn sample_value(&self, x: T) -> Complex<T> {
        match &self.kind {
            Kind::Combination(parts) => parts.iter().fold(Complex::zero(), |acc, (c, d)| acc + *c * d.sample_value(x)),
            Kind::Sampled { x0, h, values, .. } => {
                let pos = (x - *x0) / *h;
                if pos < T::zero() || pos > T::from_usize_lossy(values.len() - 1) {
                    return Complex::zero();
                }
                let i = pos.floor().to_usize().unwrap_or(0).min(values.len() - 2);
                let w = pos - T::from_usize_lossy(i);
                Complex::new(values[i] * (T::one() - w) + values[i + 1] * w, T::zero())
            }
            _ => self.point_value(x),
        }
    }
}

/// A distribution restricted to a window as a fixed quadrature rule plus
/// atoms: `<u, psi phi> ~ sum_k weights[k] phi(nodes[k]) + atom terms`.
#[derive(Clone, Debug)]
pub(crate) struct Discretized<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<Complex<T>>,
    /// `(coefficient, position, derivative order)` of `delta^{(d)}` terms.
    pub atoms: Vec<(Complex<T>, T, usize)>,
}

impl<T: Real> Distribution<T> {
    /// Rule valid for test functions whose oscillation stays below `freq`,
    /// with the same panel count as the pointwise pairing. `None` for
    /// principal values, which need their own symmetric quadrature.
    pub(crate) fn discretize(&self, window: &Window<T>, freq: T) -> Result<Option<Discretized<T>>> {
        let mut out = Discretized { nodes: vec![], weights: vec![], atoms: vec![] };
        if self.discretize_into(window, freq, Complex::new(T::one(), T::zero()), &mut out)? {
            Ok(Some(out))
        } else {
            Ok(None)
        }
    }

    fn discretize_into(&self, window: &Window<T>, freq: T, c: Complex<T>, out: &mut Discretized<T>) -> Result<bool> {
        let (lo, hi) = window.support();
        let mut rule = |f: &dyn Fn(T) -> Complex<T>, breaks: &[T]| {
            let gl = GaussLegendre::<T>::new(16);
            for w in breaks.windows(2) {
                let len = w[1] - w[0];
                if len <= T::zero() {
                    continue;
                }
                let panels = (len * freq * T::lit(0.5)).ceil().to_usize().unwrap_or(1).max(64);
                let h = len / T::from_usize_lossy(panels);
                let half = h * T::lit(0.5);
                for p in 0..panels {
                    let mid = w[0] + h * (T::from_usize_lossy(p) + T::lit(0.5));
                    for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                        let x = mid + half * *x;
                        out.nodes.push(x);
                        out.weights.push(c * f(x) * (window.eval(x) * *wt * half));
                    }
                }
            }
        };
        match &self.kind {
            Kind::Atom { y, order } => out.atoms.push((c, *y, *order)),
            Kind::PrincipalValue { .. } => return Ok(false),
            Kind::Heaviside { y } => rule(&|_| Complex::new(T::one(), T::zero()), &[lo.max(*y), hi]),
            Kind::GevreyFlat { s, y } => {
                let (s, y) = (*s, *y);
                rule(&|x| Complex::new(gevrey_flat_value(s, x - y), T::zero()), &[lo.max(y), hi])
            }
            Kind::Function(nf) => {
                let mut breaks = vec![lo];
                breaks.extend(nf.breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
                breaks.push(hi);
                rule(&|x| (nf.f)(x), &breaks)
            }
            Kind::Sampled { x0, h, values, .. } => {
                if freq > T::zero() {
                    let guard = T::PI() / (T::lit(4.0) * freq);
                    if *h > guard {
                        return Err(Error::UnderResolved { spacing: h.to_f64_lossy(), guard: guard.to_f64_lossy() });
                    }
                }
                let n = values.len();
                for (i, &v) in values.iter().enumerate() {
                    let x = *x0 + *h * T::from_usize_lossy(i);
                    if x < lo || x > hi {
                        continue;
                    }
                    let w = if i == 0 || i == n - 1 { T::lit(0.5) } else { T::one() };
                    out.nodes.push(x);
                    out.weights.push(c * (v * w * *h * window.eval(x)));
                }
            }
            Kind::Combination(parts) => {
                for (k, d) in parts {
                    if !d.discretize_into(window, freq, c * *k, out)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Fixed composite Gauss-Legendre when a frequency is given, adaptive
/// Gauss-Kronrod otherwise.
fn integrate<T: Real>(f: impl Fn(T) -> Complex<T>, breaks: &[T], freq: T) -> Result<(Complex<T>, T)> {
    if freq > T::zero() {
        let gl = GaussLegendre::<T>::new(16);
        let mut acc = Complex::zero();
        let mut scale = T::zero();
        for w in breaks.windows(2) {
            let len = w[1] - w[0];
            if len <= T::zero() {
                continue;
            }
            let panels = (len * freq * T::lit(0.5)).ceil().to_usize().unwrap_or(1).max(64);
            let (v, s) = gl.integrate_with_scale(&f, w[0], w[1], panels);
            acc = acc + v;
            scale += s;
        }
        Ok((acc, scale))
    } else {
        let est = adaptive_from(f, breaks, T::lit(1e-15), T::lit(1e-13), 4000)?;
        Ok((est.value, est.abs))
    }
}

/// `exp(-x^{-1/s})` for `x > 0`, zero otherwise.
pub fn gevrey_flat_value<T: Real>(s: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    let e = x.powf(-T::one() / s);
    if e > T::lit(745.0) {
        T::zero()
    } else {
        (-e).exp()
    }
}

/// `f^{(j)}(x)` for `j = 0..=order`, `f(x) = exp(-x^{-1/s})`.
pub fn gevrey_flat_derivatives<T: Real>(s: T, x: T, order: usize) -> Result<Vec<T>> {
    if order > GEVREY_FLAT_MAX_ORDER {
        return Err(Error::OrderExhausted { requested: order, available: GEVREY_FLAT_MAX_ORDER });
    }
    if !(s > T::zero()) {
        return Err(invalid("GevreyFlat needs s > 0"));
    }
    Ok(gevrey_flat_jet(s, x, order).derivatives())
}

pub fn gevrey_flat_jet<T: Real>(s: T, x: T, order: usize) -> Jet<T> {
    if x <= T::zero() || x.powf(-T::one() / s) > T::lit(700.0) {
        return Jet::zero(order);
    }
    let lx = Jet::variable(x, order).ln();
    let g = lx.map_scale(-T::one() / s).exp();
    (-&g).exp()
}

/// Catalog entry addressed by name, e.g. `gevrey_flat:1` or `bv+`.
#[derive(Clone, Debug, PartialEq)]
pub enum DistSpec {
    Delta { y: f64, order: usize },
    Pv,
    Heaviside { y: f64 },
    BvPlus,
    BvMinus,
    GevreyFlat { s: f64 },
    Sampled(String),
    Gaussian,
    Abs,
    One,
    Zero,
}

impl DistSpec {
    pub fn build<T: Real>(&self) -> Result<Distribution<T>> {
        Ok(match self {
            DistSpec::Delta { y, order } => Distribution::delta_derivative(T::lit(*y), *order),
            DistSpec::Pv => Distribution::principal_value(T::zero()),
            DistSpec::Heaviside { y } => Distribution::heaviside(T::lit(*y)),
            DistSpec::BvPlus => Distribution::boundary_value_atom(true),
            DistSpec::BvMinus => Distribution::boundary_value_atom(false),
            DistSpec::GevreyFlat { s } => Distribution::gevrey_flat(T::lit(*s))?,
            DistSpec::Sampled(path) => load_sampled(path)?,
            DistSpec::Gaussian => Distribution::gaussian(),
            DistSpec::Abs => Distribution::abs(),
            DistSpec::One => Distribution::one(),
            DistSpec::Zero => Distribution::zero(),
        })
    }
}

impl FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("sampled:") {
            return Ok(DistSpec::Sampled(path.to_string()));
        }
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<f64> {
            let pos = name.len() + 1 + args[..i].iter().map(|a| a.len() + 1).sum::<usize>();
            args[i].parse::<f64>().map_err(|_| Error::Parse { pos, msg: format!("bad number `{}`", args[i]) })
        };
        match (name, args.len()) {
            ("delta", 0) => Ok(DistSpec::Delta { y: 0.0, order: 0 }),
            ("delta", 1) => Ok(DistSpec::Delta { y: num(0)?, order: 0 }),
            ("delta", 2) => Ok(DistSpec::Delta { y: num(0)?, order: num(1)? as usize }),
            ("pv", 0) => Ok(DistSpec::Pv),
            ("heaviside", 0) => Ok(DistSpec::Heaviside { y: 0.0 }),
            ("heaviside", 1) => Ok(DistSpec::Heaviside { y: num(0)? }),
            ("bv+", 0) => Ok(DistSpec::BvPlus),
            ("bv-", 0) => Ok(DistSpec::BvMinus),
            ("gevrey_flat", 1) => Ok(DistSpec::GevreyFlat { s: num(0)? }),
            ("gaussian", 0) => Ok(DistSpec::Gaussian),
            ("abs", 0) => Ok(DistSpec::Abs),
            ("one", 0) => Ok(DistSpec::One),
            ("zero", 0) => Ok(DistSpec::Zero),
            _ => Err(Error::Parse { pos: 0, msg: format!("unknown distribution `{}`", s) }),
        }
    }
}

/// Reads `x,value` rows (optional header) on a uniform grid.
pub fn load_sampled<T: Real>(path: &str) -> Result<Distribution<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_sampled(&text)
}

pub fn parse_sampled<T: Real>(text: &str) -> Result<Distribution<T>> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    let mut offset = 0;
    for line in text.lines() {
        let line_start = offset;
        offset += line.len() + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split(',');
        let (a, b) = (it.next().unwrap_or(""), it.next().unwrap_or(""));
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(x), Ok(v)) => {
                xs.push(x);
                vs.push(T::lit(v));
            }
            _ if xs.is_empty() => continue, // header
            _ => return Err(Error::Parse { pos: line_start, msg: format!("bad row `{}`", t) }),
        }
    }
    if xs.len() < 2 {
        return Err(Error::Parse { pos: 0, msg: "need at least two samples".into() });
    }
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for (i, x) in xs.iter().enumerate() {
        if (x - (xs[0] + h * i as f64)).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(Error::Parse { pos: i, msg: "samples must lie on a uniform grid".into() });
        }
    }
    let radius = (xs[xs.len() - 1] - xs[0]) * 0.5;
    Distribution::sampled(T::lit(xs[0]), T::lit(h), vs, T::lit(radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_pairs_to_value() {
        let phi = TestFunction::<f64>::bump(0.1, 1.0);
        let v = Distribution::delta(0.0).pair(&phi).unwrap();
        assert!((v.re - phi.eval(0.0)).abs() < 1e-15);
    }

    #[test]
    fn delta_prime_pairs_to_minus_derivative() {
        let phi = TestFunction::<f64>::bump(0.2, 1.0);
        let v = Distribution::delta_derivative(0.0, 1).pair(&phi).unwrap();
        let h = 1e-5;
        let fd = (phi.eval(h) - phi.eval(-h)) / (2.0 * h);
        assert!((v.re + fd).abs() < 1e-8);
    }

    #[test]
    fn pv_of_even_function_vanishes() {
        let phi = TestFunction::<f64>::bump(0.0, 1.0);
        let v = Distribution::principal_value(0.0).pair(&phi).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn window_plateau_and_support() {
        let w = Window::<f64>::new(0.0, 0.5, 1.0).unwrap();
        assert_eq!(w.eval(0.3), 1.0);
        assert_eq!(w.eval(-0.5), 1.0);
        assert_eq!(w.eval(1.0), 0.0);
        assert!((w.eval(0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gevrey_flat_first_derivative() {
        let d = gevrey_flat_derivatives(1.0, 0.3, 1).unwrap();
        let exact = (-1.0f64 / 0.3).exp() / 0.09;
        assert!((d[1] - exact).abs() < 1e-14 * exact.max(1.0));
        assert!(gevrey_flat_derivatives(1.0, -0.3, 5).unwrap().iter().all(|&v| v == 0.0));
        assert!(gevrey_flat_derivatives(1.0, 0.3, 41).is_err());
    }

    #[test]
    fn catalog_names_parse() {
        for name in ["delta", "pv", "heaviside", "bv+", "bv-", "gevrey_flat:1", "gaussian", "abs", "zero"] {
            let spec: DistSpec = name.parse().unwrap();
            spec.build::<f64>().unwrap();
        }
        assert!(matches!("gevrey_flat:q".parse::<DistSpec>(), Err(Error::Parse { pos: 12, .. })));
    }

    #[test]
    fn sampled_csv_parses() {
        let d: Distribution<f64> = parse_sampled("x,value\n0,1\n0.5,2\n1,3\n").unwrap();
        let phi = TestFunction::bump(0.5, 0.4);
        assert!(d.pair(&phi).is_ok());
    }
}
