//! Almost-analytic extensions by truncated Taylor series, their `dbar`
//! bounds, and boundary values of holomorphic functions on a half-plane.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::json;

use crate::distributions::{gevrey_flat_derivatives, TestFunction, Tester};
use crate::error::{invalid, Error, Result};
use crate::quadrature::adaptive_from;
use crate::scalar::Real;
use crate::weights::WeightSequence;

/// Derivatives `f^{(j)}(x)`, `j = 0..=order`.
pub trait DerivativeOracle<T: Real>: Send + Sync {
    fn max_order(&self) -> usize;
    fn derivatives(&self, x: T, order: usize) -> Result<Vec<T>>;
}

/// Polynomial with coefficients in increasing degree.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyOracle<T>(pub Vec<T>);

impl<T: Real> DerivativeOracle<T> for PolyOracle<T> {
    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn derivatives(&self, x: T, order: usize) -> Result<Vec<T>> {
        let mut c = self.0.clone();
        let mut out = Vec::with_capacity(order + 1);
        for _ in 0..=order {
            out.push(c.iter().rev().fold(T::zero(), |a, &v| a * x + v));
            c = c.iter().enumerate().skip(1).map(|(k, &v)| v * T::from_usize_lossy(k)).collect();
        }
        Ok(out)
    }
}

/// `exp(a x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpOracle<T>(pub T);

impl<T: Real> DerivativeOracle<T> for ExpOracle<T> {
    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn derivatives(&self, x: T, order: usize) -> Result<Vec<T>> {
        let e = (self.0 * x).exp();
        Ok((0..=order).map(|j| e * self.0.powi(j as i32)).collect())
    }
}

/// `exp(-(x - y)^{-1/s})` for `x > y`, zero otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GevreyFlatOracle<T> {
    pub s: T,
    pub y: T,
}

impl<T: Real> DerivativeOracle<T> for GevreyFlatOracle<T> {
    fn max_order(&self) -> usize {
        crate::distributions::GEVREY_FLAT_MAX_ORDER
    }

    fn derivatives(&self, x: T, order: usize) -> Result<Vec<T>> {
        gevrey_flat_derivatives(self.s, x - self.y, order)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtensionDomain<T> {
    pub x_min: T,
    pub x_max: T,
    /// Smallest nonzero `|y|`; `y = 0` itself is always allowed.
    pub y_min: T,
    pub y_max: T,
}

pub const DEFAULT_THETA: f64 = 0.5;

/// `F(x + iy) = sum_{j <= N(y)} f^{(j)}(x) (iy)^j / j!` with
/// `N(y) = max { j <= J : r(y) m_j / m_{j-1} <= theta }` and
/// `r(y) = 2^{ceil(log2 |y|)}`, so `N` is constant on dyadic annuli.
#[derive(Clone)]
pub struct AlmostAnalyticExtension<T: Real> {
    oracle: Arc<dyn DerivativeOracle<T>>,
    m: WeightSequence<T>,
    theta: T,
    j_max: usize,
    domain: ExtensionDomain<T>,
}

impl<T: Real> std::fmt::Debug for AlmostAnalyticExtension<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AlmostAnalyticExtension")
            .field("weight", &self.m.name())
            .field("theta", &self.theta)
            .field("j_max", &self.j_max)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Builds the extension. The truncation must not saturate at `J` on the
/// domain unless `allow_saturation` is set (then `N = J` near `y = 0`).
pub fn extend<T: Real>(
    oracle: Arc<dyn DerivativeOracle<T>>,
    m: WeightSequence<T>,
    theta: T,
    j_max: usize,
    domain: ExtensionDomain<T>,
    allow_saturation: bool,
) -> Result<AlmostAnalyticExtension<T>> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(invalid("theta must lie in (0, 1)"));
    }
    if !(domain.y_min > T::zero() && domain.y_max >= domain.y_min && domain.x_max >= domain.x_min) {
        return Err(invalid("domain needs 0 < y_min <= y_max and x_min <= x_max"));
    }
    if j_max + 1 > oracle.max_order() {
        return Err(Error::OrderExhausted { requested: j_max + 1, available: oracle.max_order() });
    }
    if j_max + 1 > m.order() {
        return Err(Error::TruncationExhausted(format!("weight order {} below J + 1 = {}", m.order(), j_max + 1)));
    }
    let ext = AlmostAnalyticExtension { oracle, m, theta, j_max, domain };
    if !allow_saturation {
        let r = dyadic_radius(domain.y_min);
        if ext.admits(r, j_max + 1) {
            return Err(Error::TruncationExhausted(format!(
                "N(y) saturates at J = {} for |y| = {}; raise J or y_min",
                j_max, domain.y_min
            )));
        }
    }
    Ok(ext)
}

/// `2^{ceil(log2 t)}`.
pub fn dyadic_radius<T: Real>(t: T) -> T {
    T::lit(2.0).powf(t.log2().ceil())
}

impl<T: Real> AlmostAnalyticExtension<T> {
    pub fn weight(&self) -> &WeightSequence<T> {
        &self.m
    }

    pub fn domain(&self) -> ExtensionDomain<T> {
        self.domain
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    fn admits(&self, r: T, j: usize) -> bool {
        r.ln() + self.m.log_small_quotients()[j - 1] <= self.theta.ln()
    }

    /// Truncation index; `J` at `y = 0`.
    pub fn truncation(&self, y: T) -> usize {
        let a = y.abs();
        if a == T::zero() {
            return self.j_max;
        }
        let r = dyadic_radius(a);
        let mut n = 0;
        while n < self.j_max && self.admits(r, n + 1) {
            n += 1;
        }
        n
    }

    fn check_domain(&self, x: T, y: T) -> Result<()> {
        let d = self.domain;
        let a = y.abs();
        if x < d.x_min || x > d.x_max || a > d.y_max || (a != T::zero() && a < d.y_min) {
            return Err(invalid(format!("({}, {}) outside the extension domain", x, y)));
        }
        Ok(())
    }

    pub fn eval(&self, x: T, y: T) -> Result<Complex<T>> {
        self.check_domain(x, y)?;
        let n = self.truncation(y);
        let d = self.oracle.derivatives(x, n)?;
        Ok(taylor(&d, y, n))
    }

    /// `dbar F = (1/2)(d/dx + i d/dy) F`. Inside an annulus this is
    /// `(1/2) f^{(N+1)}(x) (iy)^N / N!`; near an annulus boundary a centered
    /// difference is returned with `jump = true`.
    pub fn dbar(&self, x: T, y: T) -> Result<DbarValue<T>> {
        self.check_domain(x, y)?;
        let a = y.abs();
        let step = T::lit(1e-4) * a.max(T::lit(1e-3));
        let n = self.truncation(y);
        let straddles = a != T::zero() && (self.truncation(a - step) != n || self.truncation(a + step) != n);
        if !straddles {
            let d = self.oracle.derivatives(x, n + 1)?;
            let v = ipow(y, n) * (d[n + 1] * T::lit(0.5) / factorial::<T>(n));
            return Ok(DbarValue { value: v, truncation: n, jump: false });
        }
        // Differences of the fixed-N polynomials on either side.
        let fx = |xx: T, yy: T, nn: usize| -> Result<Complex<T>> {
            Ok(taylor(&self.oracle.derivatives(xx, nn)?, yy, nn))
        };
        let hx = step;
        let dx = (fx(x + hx, y, n)? - fx(x - hx, y, n)?) / (hx + hx);
        let dy = (fx(x, y + step, self.truncation(y + step))? - fx(x, y - step, self.truncation(y - step))?) / (step + step);
        let v = (dx + Complex::<T>::i() * dy) * T::lit(0.5);
        Ok(DbarValue { value: v, truncation: n, jump: true })
    }
}

fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |a, k| a * T::from_usize_lossy(k))
}

/// `(iy)^n`.
fn ipow<T: Real>(y: T, n: usize) -> Complex<T> {
    let m = y.powi(n as i32);
    match n % 4 {
        0 => Complex::new(m, T::zero()),
        1 => Complex::new(T::zero(), m),
        2 => Complex::new(-m, T::zero()),
        _ => Complex::new(T::zero(), -m),
    }
}

fn taylor<T: Real>(d: &[T], y: T, n: usize) -> Complex<T> {
    let mut acc = Complex::zero();
    let mut term = Complex::new(T::one(), T::zero());
    for (j, &dj) in d.iter().enumerate().take(n + 1) {
        if j > 0 {
            term = term * Complex::new(T::zero(), y) / T::from_usize_lossy(j);
        }
        acc = acc + term * dj;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DbarValue<T> {
    pub value: Complex<T>,
    pub truncation: usize,
    pub jump: bool,
}

/// Grid of `(x, y)` points for bound verification.
#[derive(Clone, Debug, PartialEq)]
pub struct DbarGrid<T> {
    pub xs: Vec<T>,
    pub ys: Vec<T>,
}

impl<T: Real> DbarGrid<T> {
    /// `nx` uniform x-points and `ny` geometric y-points, each offset by half a
    /// step so no point falls on a dyadic annulus boundary or on `x = x_min`.
    pub fn for_domain(d: &ExtensionDomain<T>, nx: usize, ny: usize) -> Self {
        let hx = (d.x_max - d.x_min) / T::from_usize_lossy(nx);
        let xs = (0..nx).map(|i| d.x_min + hx * (T::from_usize_lossy(i) + T::lit(0.5))).collect();
        let (la, lb) = (d.y_min.ln(), d.y_max.ln());
        let hy = (lb - la) / T::from_usize_lossy(ny);
        let ys = (0..ny)
            .map(|i| {
                let y = (la + hy * (T::from_usize_lossy(i) + T::lit(0.5))).exp();
                // keep clear of powers of two
                let l = y.log2();
                if (l - l.round()).abs() < T::lit(1e-3) {
                    y * T::lit(1.01)
                } else {
                    y
                }
            })
            .collect();
        DbarGrid { xs, ys }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundConfig {
    pub q_min: f64,
    /// Largest admissible `Q`; needing more means the bound fails.
    pub q_cap: f64,
    pub q_steps_per_octave: usize,
    /// `C` may not exceed `c_factor * sup |f|` over the grid's x-points.
    pub c_factor: f64,
    /// Tolerance factor for jump-flagged points.
    pub jump_slack: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig { q_min: 1.0 / 16.0, q_cap: 4096.0, q_steps_per_octave: 4, c_factor: 1e3, jump_slack: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DbarReport<T> {
    pub c: T,
    pub q: T,
    pub ok: bool,
    pub max_dbar: T,
    /// Point where `|dbar F| / h_M(Q|y|)` is largest for the reported `Q`.
    pub worst_point: (T, T),
    pub nx: usize,
    pub ny: usize,
    pub samples: Vec<(T, T, T, usize, bool)>,
}

impl<T: Real> DbarReport<T> {
    pub fn to_json(&self) -> serde_json::Value {
        let f = |v: T| {
            let v = v.to_f64_lossy();
            if v.is_finite() {
                json!(v)
            } else {
                serde_json::Value::Null
            }
        };
        let ys: Vec<f64> = self.samples.iter().map(|s| s.1.to_f64_lossy()).collect();
        let ymin = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let ymax = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        json!({
            "C": f(self.c),
            "Q": f(self.q),
            "ok": self.ok,
            "grid": { "nx": self.nx, "ny": self.ny, "y_min": ymin, "y_max": ymax },
            "worst_point": [self.worst_point.0.to_f64_lossy(), self.worst_point.1.to_f64_lossy()],
        })
    }

    /// Heatmap rows `x,y,abs_dbar,N,jump`.
    pub fn heatmap_csv(&self) -> String {
        let mut s = String::from("x,y,abs_dbar,N,jump\n");
        for (x, y, v, n, j) in &self.samples {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e},{},{}", x.to_f64_lossy(), y.to_f64_lossy(), v.to_f64_lossy(), n, j);
        }
        s
    }
}

/// Smallest `Q` on a geometric grid with
/// `C(Q) = max |dbar F| / h_M(Q |y|) <= c_factor * sup |f|`, then that `C`.
/// Since `h_M <= 1`, an extension whose `dbar` exceeds the cap fails for
/// every `Q`.
pub fn verify_dbar_bound<T: Real>(f: &AlmostAnalyticExtension<T>, grid: &DbarGrid<T>, cfg: &BoundConfig) -> Result<DbarReport<T>> {
    if !(cfg.q_min > 0.0 && cfg.q_cap >= cfg.q_min && cfg.c_factor >= 1.0 && cfg.q_steps_per_octave >= 1) {
        return Err(invalid("bad bound configuration"));
    }
    let pts: Vec<(T, T)> = grid.xs.iter().flat_map(|&x| grid.ys.iter().map(move |&y| (x, y))).collect();
    let samples: Vec<(T, T, T, usize, bool)> = pts
        .par_iter()
        .map(|&(x, y)| {
            let d = f.dbar(x, y)?;
            Ok((x, y, d.value.norm(), d.truncation, d.jump))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_d = samples.iter().fold(T::zero(), |a, s| a.max(s.2));
    let base = DbarReport {
        c: T::zero(),
        q: T::lit(cfg.q_min),
        ok: true,
        max_dbar: max_d,
        worst_point: pts.first().copied().unwrap_or((T::zero(), T::zero())),
        nx: grid.xs.len(),
        ny: grid.ys.len(),
        samples: samples.clone(),
    };
    if max_d == T::zero() {
        return Ok(base);
    }
    let m = f.weight();
    let mut f_sup = T::zero();
    for &x in &grid.xs {
        f_sup = f_sup.max(f.oracle.derivatives(x, 0)?[0].abs());
    }
    let cap = (T::lit(cfg.c_factor) * f_sup.max(T::min_positive_value())).ln();
    // log C(Q) with worst point; None when h_M is out of range for this Q.
    let log_c = |q: T| -> Option<(T, (T, T))> {
        let mut best = T::neg_infinity();
        let mut at = (T::zero(), T::zero());
        for &(x, y, v, _, jump) in &samples {
            if v == T::zero() {
                continue;
            }
            let lh = m.log_small_h(q * y.abs()).ok()?;
            let mut lc = v.ln() - lh;
            if jump {
                lc = lc - T::lit(cfg.jump_slack).ln();
            }
            if lc > best {
                best = lc;
                at = (x, y);
            }
        }
        Some((best, at))
    };
    let octaves = (cfg.q_cap / cfg.q_min).log2();
    let nq = (octaves * cfg.q_steps_per_octave as f64).round() as usize + 1;
    let mut last = None;
    for i in 0..nq {
        let q = T::lit(cfg.q_min * 2f64.powf(i as f64 / cfg.q_steps_per_octave as f64));
        let Some((lc, at)) = log_c(q) else { continue };
        last = Some((q, lc, at));
        if lc <= cap {
            return Ok(DbarReport { c: lc.exp(), q, ok: true, worst_point: at, ..base });
        }
    }
    match last {
        Some((q, lc, at)) => Ok(DbarReport { c: lc.exp(), q, ok: false, worst_point: at, ..base }),
        None => Err(Error::TruncationExhausted("h_M out of range for every candidate Q".into())),
    }
}

/// Fitted `Q` for a sequence of domains (e.g. shrinking `y` windows); a
/// growing sequence indicates that no finite `Q` works near `y = 0`.
pub fn q_trend<T: Real>(f: &AlmostAnalyticExtension<T>, grids: &[DbarGrid<T>], cfg: &BoundConfig) -> Result<Vec<DbarReport<T>>> {
    grids.iter().map(|g| verify_dbar_bound(f, g, cfg)).collect()
}

/// Which half-plane the boundary value is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `x + i eps`, `eps -> 0+`.
    Upper,
    /// `x - i eps`.
    Lower,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BvConfig {
    pub eps0: f64,
    pub levels: usize,
    /// Largest admissible local growth exponent `log2(S_{j+1} / S_j)`.
    pub growth_limit: f64,
    pub rel_tol: f64,
}

impl Default for BvConfig {
    fn default() -> Self {
        BvConfig { eps0: 0.25, levels: 9, growth_limit: 12.0, rel_tol: 1e-13 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryValue<T> {
    pub value: Complex<T>,
    pub error: T,
    /// Detected leading order `p` in `I(eps) = I_0 + a eps^p + ...`.
    pub order: usize,
    /// Largest observed growth exponent on the schedule.
    pub growth: T,
    pub levels: Vec<Complex<T>>,
}

/// `lim <F(. +- i eps), phi>` by Richardson extrapolation over
/// `eps_j = 2^{-j} eps0`. `breaks` lists points where `F` may concentrate.
pub fn boundary_value<T: Real, F>(f: F, side: Side, phi: &TestFunction<T>, breaks: &[T], cfg: &BvConfig) -> Result<BoundaryValue<T>>
where
    F: Fn(Complex<T>) -> Complex<T> + Sync,
{
    if cfg.levels < 3 || !(cfg.eps0 > 0.0) {
        return Err(invalid("need eps0 > 0 and at least 3 levels"));
    }
    let sgn = if side == Side::Upper { T::one() } else { -T::one() };
    let (lo, hi) = phi.support();
    let eps: Vec<T> = (0..cfg.levels).map(|j| T::lit(cfg.eps0 * 0.5f64.powi(j as i32))).collect();
    // Slow-growth gate on sup |F(x + i eps)| over support samples.
    let sups: Vec<T> = eps
        .iter()
        .map(|&e| {
            let mut xs: Vec<T> = (0..=400).map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::lit(400.0)).collect();
            for &b in breaks {
                for c in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
                    xs.push(b + e * T::lit(c));
                    xs.push(b - e * T::lit(c));
                }
            }
            xs.iter().map(|&x| f(Complex::new(x, sgn * e)).norm()).fold(T::zero(), |a, v| if v.is_nan() { T::infinity() } else { a.max(v) })
        })
        .collect();
    let mut growth = T::neg_infinity();
    for w in sups.windows(2) {
        if !w[1].is_finite() {
            return Err(Error::Blowup(w[0].to_f64_lossy()));
        }
        if w[0] > T::zero() && w[1] > T::zero() {
            let k = (w[1] / w[0]).log2();
            growth = growth.max(k);
            if k > T::lit(cfg.growth_limit) {
                return Err(Error::SlowGrowthViolated { exponent: k.to_f64_lossy(), limit: cfg.growth_limit });
            }
        }
    }
    let mut bps = vec![lo];
    bps.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    bps.push(hi);
    bps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let levels: Vec<Complex<T>> = eps
        .par_iter()
        .map(|&e| {
            let g = |x: T| f(Complex::new(x, sgn * e)) * phi.eval(x);
            adaptive_from(g, &bps, T::lit(1e-300), T::lit(cfg.rel_tol), 20000).map(|r| r.value)
        })
        .collect::<Result<Vec<_>>>()?;
    richardson(&levels).map(|(value, error, order)| BoundaryValue { value, error, order, growth, levels })
}

/// Extrapolates a halving sequence to step zero, detecting the leading order
/// from the ratio of the last differences and eliminating successive powers.
pub fn richardson<T: Real>(levels: &[Complex<T>]) -> Result<(Complex<T>, T, usize)> {
    let n = levels.len();
    if n < 3 {
        return Err(Error::ExtrapolationFailed("need at least 3 levels".into()));
    }
    let d1 = levels[n - 2] - levels[n - 3];
    let d2 = levels[n - 1] - levels[n - 2];
    let scale = levels.iter().fold(T::zero(), |a, v| a.max(v.norm()));
    if d2.norm() <= T::epsilon() * T::lit(16.0) * scale.max(T::min_positive_value()) {
        return Ok((levels[n - 1], d2.norm(), 0));
    }
    let ratio = d1.norm() / d2.norm();
    if !(ratio > T::lit(1.2)) {
        return Err(Error::ExtrapolationFailed(format!("differences not shrinking (ratio {})", ratio)));
    }
    let p = ratio.log2().round().max(T::one()).to_usize().unwrap_or(1);
    let mut col: Vec<Complex<T>> = levels.to_vec();
    let mut prev_err = T::infinity();
    let mut best = (levels[n - 1], d2.norm());
    let mut q = p;
    while col.len() >= 2 {
        let f = T::lit(2f64.powi(q as i32));
        let next: Vec<Complex<T>> = col.windows(2).map(|w| (w[1] * f - w[0]) / (f - T::one())).collect();
        let err = if next.len() >= 2 { (next[next.len() - 1] - next[next.len() - 2]).norm() } else { T::infinity() };
        if err < best.1 {
            best = (next[next.len() - 1], err);
        }
        if !(err < prev_err) {
            break;
        }
        prev_err = err;
        col = next;
        q += 1;
    }
    Ok((best.0, best.1, p))
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpEntry<T> {
    pub phi: TestFunction<T>,
    pub value: Complex<T>,
    pub expected: Complex<T>,
    pub deviation: T,
    pub tolerance: T,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpReport<T> {
    pub entries: Vec<JumpEntry<T>>,
    pub ok: bool,
    pub convention: String,
}

pub const JUMP_CONVENTION: &str = "bv(1/(x-i0)) - bv(1/(x+i0)) = 2*pi*i*delta (classical Sokhotski-Plemelj normalization)";

/// Checks `<bv(1/(x - i0)) - bv(1/(x + i0)), phi> = 2 pi i phi(0)` within
/// `rel_tol * ||phi||_inf` for each test function.
pub fn verify_jump<T: Real>(phis: &[TestFunction<T>], rel_tol: T, cfg: &BvConfig) -> Result<JumpReport<T>> {
    if phis.len() < 3 {
        return Err(invalid("verify_jump needs at least three test functions"));
    }
    let inv = |z: Complex<T>| Complex::new(T::one(), T::zero()) / z;
    let mut entries = Vec::with_capacity(phis.len());
    for phi in phis {
        let plus = boundary_value(inv, Side::Upper, phi, &[T::zero()], cfg)?;
        let minus = boundary_value(inv, Side::Lower, phi, &[T::zero()], cfg)?;
        let value = minus.value - plus.value;
        let expected = Complex::new(T::zero(), T::TAU() * phi.eval(T::zero()));
        let deviation = (value - expected).norm();
        let tolerance = rel_tol * phi.sup_norm();
        entries.push(JumpEntry { phi: phi.clone(), value, expected, deviation, tolerance, ok: deviation <= tolerance });
    }
    let ok = entries.iter().all(|e| e.ok);
    Ok(JumpReport { entries, ok, convention: JUMP_CONVENTION.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> ExtensionDomain<f64> {
        ExtensionDomain { x_min: -1.0, x_max: 1.0, y_min: 0.05, y_max: 0.5 }
    }

    #[test]
    fn restriction_is_exact() {
        let m = WeightSequence::gevrey(1.0, 64).unwrap();
        let f = extend(Arc::new(ExpOracle(1.0)), m, 0.5, 20, dom(), true).unwrap();
        assert_eq!(f.eval(0.3, 0.0).unwrap(), Complex::new(0.3f64.exp(), 0.0));
    }

    #[test]
    fn truncation_nonincreasing() {
        let m = WeightSequence::gevrey(1.0, 64).unwrap();
        let f = extend(Arc::new(ExpOracle(1.0)), m, 0.5, 20, dom(), false).unwrap();
        let mut prev = usize::MAX;
        for i in 0..200 {
            let y = 0.05 + 0.45 * i as f64 / 199.0;
            let n = f.truncation(y);
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn polynomial_dbar_vanishes() {
        let m = WeightSequence::gevrey(1.0, 64).unwrap();
        let f = extend(Arc::new(PolyOracle(vec![1.0, -2.0, 3.0])), m, 0.5, 20, dom(), true).unwrap();
        // N >= 2 as long as 2 r <= 1/2
        let d = f.dbar(0.2, 0.1).unwrap();
        assert_eq!(d.value, Complex::new(0.0, 0.0));
    }

    #[test]
    fn richardson_linear_sequence() {
        let lv: Vec<Complex<f64>> = (0..6).map(|j| Complex::new(1.0 + 0.5f64.powi(j), 0.0)).collect();
        let (v, _, p) = richardson(&lv).unwrap();
        assert_eq!(p, 1);
        assert!((v.re - 1.0).abs() < 1e-14);
    }
}
