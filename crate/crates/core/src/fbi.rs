//! Generalized FBI transform
//! `F u(t, xi) = c_p <u(x), e^{i xi (t-x)} e^{-|xi| p(t-x)}>`
//! with a homogeneous elliptic generator `p`, and its regularized inverse.

use std::fmt::Write as _;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::distributions::{Discretized, Distribution, Tester, Window};
use crate::error::{invalid, Error, Result};
use crate::jet::Jet;
use crate::quadrature::GaussLegendre;
use crate::scalar::{cis, Real};

/// Directions sampled on the unit circle when certifying ellipticity in 2D.
pub const SPHERE_SAMPLES: usize = 1024;

/// Real homogeneous polynomial of degree `2k`, certified positive on the sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticPolynomial<T> {
    n: usize,
    k: u32,
    terms: Vec<(Vec<u32>, T)>,
    c_lower: T,
    c_upper: T,
    c_p: T,
}

impl<T: Real> EllipticPolynomial<T> {
    pub fn new(n: usize, terms: Vec<(Vec<u32>, T)>) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::Unsupported(format!("dimension {}", n)));
        }
        let terms: Vec<(Vec<u32>, T)> = terms.into_iter().filter(|(_, c)| *c != T::zero()).collect();
        if terms.is_empty() {
            return Err(Error::NotElliptic("zero polynomial".into()));
        }
        let deg: u32 = terms[0].0.iter().sum();
        for (alpha, _) in &terms {
            if alpha.len() != n {
                return Err(invalid("exponent length does not match dimension"));
            }
            if alpha.iter().sum::<u32>() != deg {
                return Err(Error::NotElliptic("not homogeneous".into()));
            }
        }
        if deg == 0 || deg % 2 == 1 {
            return Err(Error::NotElliptic(format!("degree {} is not a positive even number", deg)));
        }
        let mut p = EllipticPolynomial { n, k: deg / 2, terms, c_lower: T::zero(), c_upper: T::zero(), c_p: T::zero() };
        p.certify()?;
        p.c_p = p.compute_normalization()?;
        Ok(p)
    }

    /// `|x|^2`.
    pub fn euclidean(n: usize) -> Result<Self> {
        match n {
            1 => Self::new(1, vec![(vec![2], T::one())]),
            2 => Self::new(2, vec![(vec![2, 0], T::one()), (vec![0, 2], T::one())]),
            _ => Err(Error::Unsupported(format!("dimension {}", n))),
        }
    }

    /// `x^4` in 1D, `x1^4 + x2^4` in 2D.
    pub fn quartic(n: usize) -> Result<Self> {
        match n {
            1 => Self::new(1, vec![(vec![4], T::one())]),
            2 => Self::new(2, vec![(vec![4, 0], T::one()), (vec![0, 4], T::one())]),
            _ => Err(Error::Unsupported(format!("dimension {}", n))),
        }
    }

    fn certify(&mut self) -> Result<()> {
        if self.n == 1 {
            let a = self.eval(&[T::one()]);
            let b = self.eval(&[-T::one()]);
            if !(a > T::zero() && b > T::zero()) {
                return Err(Error::NotElliptic(format!("p(1) = {}, p(-1) = {}", a, b)));
            }
            self.c_lower = a.min(b);
            self.c_upper = a.max(b);
            return Ok(());
        }
        // On the circle |d/dtheta x^alpha| <= |alpha|, so the sampled min is
        // within L * dtheta / 2 of the true min.
        let lip: T = self.terms.iter().map(|(a, c)| c.abs() * T::from_u32(a.iter().sum()).unwrap()).sum();
        let dtheta = T::TAU() / T::from_usize_lossy(SPHERE_SAMPLES);
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..SPHERE_SAMPLES {
            let th = dtheta * T::from_usize_lossy(i);
            let v = self.eval(&[th.cos(), th.sin()]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let margin = lip * dtheta * T::lit(0.5);
        if !(lo - margin > T::zero()) {
            return Err(Error::NotElliptic(format!("sampled minimum {} with margin {}", lo, margin)));
        }
        self.c_lower = lo - margin;
        self.c_upper = hi + margin;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Half-degree k (degree is 2k).
    pub fn half_degree(&self) -> u32 {
        self.k
    }

    pub fn terms(&self) -> &[(Vec<u32>, T)] {
        &self.terms
    }

    pub fn ellipticity_bounds(&self) -> (T, T) {
        (self.c_lower, self.c_upper)
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .map(|(a, c)| a.iter().zip(x).fold(*c, |acc, (&e, &xi)| acc * xi.powi(e as i32)))
            .sum()
    }

    /// `c_p = 1 / int e^{-p}`.
    pub fn normalization(&self) -> T {
        self.c_p
    }

    /// Per-axis coefficients `a_i` when `p = sum a_i x_i^{2k}`.
    pub fn separable(&self) -> Option<Vec<T>> {
        let deg = 2 * self.k;
        let mut out = vec![T::zero(); self.n];
        for (a, c) in &self.terms {
            let nz: Vec<usize> = (0..self.n).filter(|&i| a[i] != 0).collect();
            if nz.len() != 1 || a[nz[0]] != deg {
                return None;
            }
            out[nz[0]] += *c;
        }
        Some(out)
    }

    fn compute_normalization(&self) -> Result<T> {
        // e^{-p} <= e^{-c_lower |x|^{2k}}: truncate where that is below e^{-60}.
        let r = (T::lit(60.0) / self.c_lower).powf(T::one() / T::from_u32(2 * self.k).unwrap());
        let gl = GaussLegendre::<T>::new(16);
        let mut prev = T::zero();
        let mut panels = 4;
        while panels <= 1024 {
            let v = if self.n == 1 {
                gl.integrate(|x| (-self.eval(&[x])).exp(), -r, r, panels)
            } else {
                gl.integrate(|y| gl.integrate(|x| (-self.eval(&[x, y])).exp(), -r, r, panels), -r, r, panels)
            };
            if panels > 4 && ((v - prev) / v).abs() <= T::lit(1e-11).max(T::epsilon() * T::lit(64.0)) {
                return Ok(T::one() / v);
            }
            prev = v;
            panels *= 2;
        }
        Err(Error::QuadratureNonConvergent("normalization integral did not settle".into()))
    }

    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (i, (a, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                s.push_str(" + ");
            }
            let _ = write!(s, "{}", c);
            for (j, &e) in a.iter().enumerate() {
                if e > 0 {
                    let _ = write!(s, "*x{}^{}", j + 1, e);
                }
            }
        }
        s
    }
}

/// One axis of the kernel times a window:
/// `psi(x) e^{i freq (t-x)} e^{-damp a (t-x)^{2k}}`.
#[derive(Clone, Copy, Debug)]
pub struct KernelFactor<T> {
    pub t: T,
    pub freq: T,
    pub damp: T,
    pub coef: T,
    pub degree: u32,
    pub window: Window<T>,
}

impl<T: Real> KernelFactor<T> {
    fn exponent(&self, z: T) -> Complex<T> {
        Complex::new(-self.damp * self.coef * z.powi(self.degree as i32), self.freq * z)
    }
}

impl<T: Real> Tester<T> for KernelFactor<T> {
    fn value(&self, x: T) -> Complex<T> {
        let w = self.window.eval(x);
        if w == T::zero() {
            return Complex::zero();
        }
        self.exponent(self.t - x).exp() * w
    }

    fn jet(&self, x: T, order: usize) -> Jet<Complex<T>> {
        let w = self.window.jet(x, order).to_complex();
        // z = t - x as a jet in x
        let mut z = Jet::variable(Complex::new(self.t - x, T::zero()), order);
        if order >= 1 {
            z.c[1] = Complex::new(-T::one(), T::zero());
        }
        let mut poly = vec![Complex::zero(); self.degree as usize + 1];
        poly[1] = Complex::new(T::zero(), self.freq);
        poly[self.degree as usize] = poly[self.degree as usize] + Complex::new(-self.damp * self.coef, T::zero());
        let e = z.compose_poly(&poly).exp();
        w.mul_jet(&e)
    }

    fn support(&self) -> (T, T) {
        self.window.support()
    }

    fn max_frequency(&self) -> T {
        // Oscillation plus the steepest Gaussian-type slope across the window.
        self.freq.abs() + self.damp.sqrt() + T::one()
    }
}

/// FBI value at one point in 1D together with the absolute integrand scale.
pub fn fbi_point<T: Real>(
    u: &Distribution<T>,
    window: &Window<T>,
    p: &EllipticPolynomial<T>,
    t: T,
    xi: T,
) -> Result<(Complex<T>, T)> {
    let coef = one_dim_coefficient(p)?;
    let kf = KernelFactor { t, freq: xi, damp: xi.abs(), coef, degree: 2 * p.half_degree(), window: *window };
    let (v, s) = u.pair_with_scale(&kf)?;
    Ok((v * p.normalization(), s * p.normalization()))
}

fn one_dim_coefficient<T: Real>(p: &EllipticPolynomial<T>) -> Result<T> {
    if p.dim() != 1 {
        return Err(Error::Unsupported("1D transform needs a 1D generator".into()));
    }
    Ok(p.terms()[0].1)
}

/// Tensor product `u1 ⊗ u2` in two variables.
#[derive(Clone, Debug)]
pub struct Tensor2<T> {
    pub factors: [Distribution<T>; 2],
}

/// FBI value of a tensor product in 2D; needs a separable generator.
pub fn fbi_point_2d<T: Real>(
    u: &Tensor2<T>,
    windows: &[Window<T>; 2],
    p: &EllipticPolynomial<T>,
    t: [T; 2],
    xi: [T; 2],
) -> Result<(Complex<T>, T)> {
    let coefs = p
        .separable()
        .ok_or_else(|| Error::Unsupported("2D tensor transform needs a separable generator".into()))?;
    let mag = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    let mut val = Complex::new(p.normalization(), T::zero());
    let mut scale = p.normalization();
    for i in 0..2 {
        let kf = KernelFactor { t: t[i], freq: xi[i], damp: mag, coef: coefs[i], degree: 2 * p.half_degree(), window: windows[i] };
        let (v, s) = u.factors[i].pair_with_scale(&kf)?;
        val = val * v;
        scale = scale * s;
    }
    Ok((val, scale))
}

/// Sampled transform: `values[i * xi.len() + j] = F u(t_i, xi_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FbiGrid<T> {
    pub dim: usize,
    /// Flattened spatial points, `dim` coordinates each.
    pub t: Vec<T>,
    /// Flattened unit directions, `dim` coordinates each.
    pub xi_dir: Vec<T>,
    pub xi_mag: Vec<T>,
    pub values: Vec<Complex<T>>,
    /// Absolute integrand scale per value (rounding-noise bound).
    pub scales: Vec<T>,
    pub c_p: T,
    pub generator: String,
}

impl<T: Real> FbiGrid<T> {
    pub fn nt(&self) -> usize {
        self.t.len() / self.dim
    }

    pub fn nxi(&self) -> usize {
        self.xi_mag.len()
    }

    pub fn value(&self, i: usize, j: usize) -> Complex<T> {
        self.values[i * self.nxi() + j]
    }

    /// Signed frequency vector of column `j`.
    pub fn xi(&self, j: usize) -> Vec<T> {
        (0..self.dim).map(|d| self.xi_dir[j * self.dim + d] * self.xi_mag[j]).collect()
    }

    /// CSV with `#` header lines recording the generator and `c_p`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# p: {}", self.generator);
        let _ = writeln!(s, "# c_p: {:.17e}", self.c_p.to_f64_lossy());
        let cols: Vec<String> = (1..=self.dim)
            .map(|d| format!("t{}", d))
            .chain((1..=self.dim).map(|d| format!("xi{}", d)))
            .chain(["re".to_string(), "im".to_string()])
            .collect();
        let _ = writeln!(s, "{}", cols.join(","));
        for i in 0..self.nt() {
            for j in 0..self.nxi() {
                let mut row: Vec<String> = (0..self.dim).map(|d| format!("{:.17e}", self.t[i * self.dim + d].to_f64_lossy())).collect();
                row.extend(self.xi(j).iter().map(|v| format!("{:.17e}", v.to_f64_lossy())));
                let v = self.value(i, j);
                row.push(format!("{:.17e}", v.re.to_f64_lossy()));
                row.push(format!("{:.17e}", v.im.to_f64_lossy()));
                let _ = writeln!(s, "{}", row.join(","));
            }
        }
        s
    }
}

/// 1D transform on the product of `t_points` and signed frequencies `xis`.
pub fn fbi_transform<T: Real>(
    u: &Distribution<T>,
    window: &Window<T>,
    p: &EllipticPolynomial<T>,
    t_points: &[T],
    xis: &[T],
) -> Result<FbiGrid<T>> {
    let coef = one_dim_coefficient(p)?;
    let nxi = xis.len();
    let xi_max = xis.iter().fold(T::zero(), |a, x| a.max(x.abs()));
    let freq = xi_max + xi_max.sqrt() + T::one();
    let (values, scales) = match u.discretize(window, freq)? {
        Some(rule) => transform_rule(&rule, window, coef, 2 * p.half_degree(), p.normalization(), t_points, xis)?,
        None => {
            let cells: Vec<(Complex<T>, T)> = (0..t_points.len() * nxi)
                .into_par_iter()
                .map(|idx| fbi_point(u, window, p, t_points[idx / nxi], xis[idx % nxi]))
                .collect::<Result<Vec<_>>>()?;
            cells.into_iter().unzip()
        }
    };
    Ok(FbiGrid {
        dim: 1,
        t: t_points.to_vec(),
        xi_dir: xis.iter().map(|&x| if x < T::zero() { -T::one() } else { T::one() }).collect(),
        xi_mag: xis.iter().map(|x| x.abs()).collect(),
        values,
        scales,
        c_p: p.normalization(),
        generator: p.describe(),
    })
}

/// Grid transform from a fixed rule: per frequency the oscillatory factor
/// `e^{-i xi x_k}` is folded into the weights once, leaving one real
/// exponential per node and grid point.
fn transform_rule<T: Real>(
    rule: &Discretized<T>,
    window: &Window<T>,
    coef: T,
    degree: u32,
    c_p: T,
    t_points: &[T],
    xis: &[T],
) -> Result<(Vec<Complex<T>>, Vec<T>)> {
    let nt = t_points.len();
    let columns: Vec<Vec<(Complex<T>, T)>> = xis
        .par_iter()
        .map(|&xi| {
            let damp = xi.abs() * coef;
            let folded: Vec<Complex<T>> = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * cis(-xi * x)).collect();
            let mags: Vec<T> = rule.weights.iter().map(|w| w.norm()).collect();
            t_points
                .iter()
                .map(|&t| {
                    let mut acc = Complex::zero();
                    let mut scale = T::zero();
                    for k in 0..rule.nodes.len() {
                        let g = (-damp * (t - rule.nodes[k]).powi(degree as i32)).exp();
                        acc = acc + folded[k] * g;
                        scale += mags[k] * g;
                    }
                    acc = acc * cis(xi * t);
                    for &(c, y, order) in &rule.atoms {
                        let kf = KernelFactor { t, freq: xi, damp: xi.abs(), coef, degree, window: *window };
                        let (v, s) = Distribution::delta_derivative(y, order).pair_with_scale(&kf)?;
                        acc = acc + c * v;
                        scale += c.norm() * s;
                    }
                    Ok((acc * c_p, scale * c_p))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(nt * xis.len());
    let mut scales = Vec::with_capacity(nt * xis.len());
    for i in 0..nt {
        for col in &columns {
            values.push(col[i].0);
            scales.push(col[i].1);
        }
    }
    Ok((values, scales))
}

/// `(2 pi)^{-n} int int e^{i xi (x - t)} e^{-eps |xi|^2} F(t, xi) |xi|^{n/2k} dt dxi`
/// by trapezoid sums, sampled at the grid's `t` points.
///
/// `tol` bounds the relative integrand mass on the outermost frequency
/// columns; a larger tail means the box is too small.
pub fn fbi_inverse<T: Real>(f: &FbiGrid<T>, k: u32, eps: T, tol: T) -> Result<Vec<Complex<T>>> {
    if f.dim != 1 {
        return Err(Error::Unsupported("inverse implemented for 1D grids".into()));
    }
    if !(eps > T::zero()) {
        return Err(invalid("epsilon must be positive"));
    }
    let nt = f.nt();
    let nxi = f.nxi();
    let xs: Vec<T> = f.t.clone();
    let xis: Vec<T> = (0..nxi).map(|j| f.xi(j)[0]).collect();
    let dt = uniform_step(&xs)?;
    let dxi = uniform_step(&xis)?;
    let expo = T::one() / T::from_u32(2 * k).unwrap();
    // A(xi) = sum_t e^{-i xi t} F(t, xi) dt, weighted by the regularizer.
    let a: Vec<Complex<T>> = (0..nxi)
        .into_par_iter()
        .map(|j| {
            let xi = xis[j];
            let mut acc = Complex::zero();
            for i in 0..nt {
                let w = if i == 0 || i == nt - 1 { T::lit(0.5) } else { T::one() };
                acc = acc + cis(-xi * xs[i]) * f.value(i, j) * w;
            }
            let wx = if j == 0 || j == nxi - 1 { T::lit(0.5) } else { T::one() };
            acc * (dt * dxi * wx * (-eps * xi * xi).exp() * xi.abs().powf(expo))
        })
        .collect();
    let total: T = a.iter().map(|v| v.norm()).sum();
    let tail = (a[0].norm() + a[nxi - 1].norm()) * T::lit(2.0);
    if total > T::zero() && tail > tol * total {
        return Err(Error::FrequencyBoxTooSmall { tail_mass: (tail / total).to_f64_lossy(), tol: tol.to_f64_lossy() });
    }
    let norm = T::one() / T::TAU();
    Ok(xs
        .par_iter()
        .map(|&x| {
            let mut acc = Complex::zero();
            for j in 0..nxi {
                acc = acc + cis(xis[j] * x) * a[j];
            }
            acc * norm
        })
        .collect())
}

fn uniform_step<T: Real>(v: &[T]) -> Result<T> {
    if v.len() < 2 {
        return Err(Error::GridMismatch("need at least two grid points".into()));
    }
    let h = (v[v.len() - 1] - v[0]) / T::from_usize_lossy(v.len() - 1);
    for (i, &x) in v.iter().enumerate() {
        if (x - (v[0] + h * T::from_usize_lossy(i))).abs() > T::lit(1e-9) * (T::one() + x.abs()) {
            return Err(Error::GridMismatch("inverse needs uniform grids".into()));
        }
    }
    Ok(h)
}
