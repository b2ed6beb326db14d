//! Wavefront estimation from FBI decay: along each ray the FBI magnitudes are
//! compared with `e^{-omega_M(gamma |xi|)}` for a range of `gamma`.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::distributions::{Distribution, Window};
use crate::error::{invalid, Error, Result};
use crate::fbi::{fbi_point, fbi_point_2d, EllipticPolynomial, Tensor2};
use crate::scalar::Real;
use crate::weights::WeightSequence;

/// Something whose windowed FBI transform can be sampled.
pub trait Microlocal<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// `F(psi u)(t, xi)` and its absolute quadrature scale, with `psi` the
    /// (product) window of the given shape centered at `center`.
    fn fbi_at(
        &self,
        center: &[T],
        shape: WindowShape<T>,
        p: &EllipticPolynomial<T>,
        t: &[T],
        xi: &[T],
    ) -> Result<(Complex<T>, T)>;
}

impl<T: Real> Microlocal<T> for Distribution<T> {
    fn dim(&self) -> usize {
        1
    }

    fn fbi_at(
        &self,
        center: &[T],
        shape: WindowShape<T>,
        p: &EllipticPolynomial<T>,
        t: &[T],
        xi: &[T],
    ) -> Result<(Complex<T>, T)> {
        let w = Window::new(center[0], shape.plateau, shape.radius)?;
        fbi_point(self, &w, p, t[0], xi[0])
    }
}

impl<T: Real> Microlocal<T> for Tensor2<T> {
    fn dim(&self) -> usize {
        2
    }

    fn fbi_at(
        &self,
        center: &[T],
        shape: WindowShape<T>,
        p: &EllipticPolynomial<T>,
        t: &[T],
        xi: &[T],
    ) -> Result<(Complex<T>, T)> {
        let w = [Window::new(center[0], shape.plateau, shape.radius)?, Window::new(center[1], shape.plateau, shape.radius)?];
        fbi_point_2d(self, &w, p, [t[0], t[1]], [xi[0], xi[1]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowShape<T> {
    pub plateau: T,
    pub radius: T,
}

/// Classifier settings. The defaults are calibrated so that `delta` is
/// SINGULAR and a Gaussian is REGULAR under the shipped Gevrey weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Candidate `gamma` values per octave.
    pub gamma_steps_per_octave: usize,
    /// Allowed growth of `log C` above the profile's peak log magnitude.
    pub kappa: f64,
    /// `coverage = gamma_hat / gamma_ref`.
    pub gamma_ref: f64,
    pub tau_reg: f64,
    pub tau_sing: f64,
    /// Magnitudes below `noise_factor * eps * scale` are treated as noise.
    pub noise_factor: f64,
    pub plateau: f64,
    pub radius: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda_min: 4.0,
            lambda_max: 512.0,
            n_lambda: 12,
            gamma_min: 2f64.powi(-10),
            gamma_max: 16.0,
            gamma_steps_per_octave: 8,
            kappa: 8.0,
            gamma_ref: 4.0,
            tau_reg: 0.5,
            tau_sing: 0.1,
            noise_factor: 64.0,
            plateau: 0.5,
            radius: 1.0,
        }
    }
}

impl FitConfig {
    pub fn lambdas<T: Real>(&self) -> Vec<T> {
        geomspace(self.lambda_min, self.lambda_max, self.n_lambda).into_iter().map(T::lit).collect()
    }

    pub fn gammas<T: Real>(&self) -> Vec<T> {
        let octaves = (self.gamma_max / self.gamma_min).log2();
        let n = (octaves * self.gamma_steps_per_octave as f64).round() as usize + 1;
        geomspace(self.gamma_min, self.gamma_max, n).into_iter().map(T::lit).collect()
    }

    pub fn shape<T: Real>(&self) -> WindowShape<T> {
        WindowShape { plateau: T::lit(self.plateau), radius: T::lit(self.radius) }
    }

    /// Largest argument passed to `omega` during a fit.
    pub fn omega_reach(&self) -> f64 {
        self.gamma_max * self.lambda_max
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_max > self.lambda_min && self.n_lambda >= 8) {
            return Err(invalid("lambda grid needs 0 < min < max and at least 8 points"));
        }
        if !(self.gamma_min > 0.0 && self.gamma_max > self.gamma_min && self.gamma_steps_per_octave >= 1) {
            return Err(invalid("bad gamma grid"));
        }
        if !(self.tau_sing < self.tau_reg && self.tau_sing >= 0.0) {
            return Err(invalid("need 0 <= tau_sing < tau_reg"));
        }
        if !(self.gamma_ref > 0.0 && self.kappa >= 0.0) {
            return Err(invalid("need gamma_ref > 0 and kappa >= 0"));
        }
        if !(self.radius > self.plateau && self.plateau > 0.0) {
            return Err(invalid("window needs 0 < plateau < radius"));
        }
        Ok(())
    }
}

fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayProfile<T> {
    pub x0: Vec<T>,
    pub direction: Vec<T>,
    pub lambdas: Vec<T>,
    /// `max_t |F(psi u)(t, lambda dir)|` over the stencil.
    pub mags: Vec<T>,
    /// Rounding floor per lambda; magnitudes at or below it carry no information.
    pub floors: Vec<T>,
    pub shape: WindowShape<T>,
    pub stencil_radius: T,
}

/// Stencil of 5 points around `x0`: `x0 + r {-1, -1/2, 0, 1/2, 1}` in 1D,
/// `x0` and `x0 +- r e_i` in 2D.
pub fn stencil<T: Real>(x0: &[T], r: T) -> Vec<Vec<T>> {
    match x0.len() {
        1 => [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|&s| vec![x0[0] + r * T::lit(s)]).collect(),
        _ => {
            let mut out = vec![x0.to_vec()];
            for i in 0..x0.len() {
                for s in [-T::one(), T::one()] {
                    let mut p = x0.to_vec();
                    p[i] += s * r;
                    out.push(p);
                }
            }
            out
        }
    }
}

pub fn directional_profile<T: Real, U: Microlocal<T> + ?Sized>(
    u: &U,
    x0: &[T],
    direction: &[T],
    lambdas: &[T],
    shape: WindowShape<T>,
    p: &EllipticPolynomial<T>,
    noise_factor: T,
) -> Result<RayProfile<T>> {
    if x0.len() != u.dim() || direction.len() != u.dim() || p.dim() != u.dim() {
        return Err(Error::GridMismatch("dimension mismatch between input, point, direction and generator".into()));
    }
    let norm = direction.iter().map(|&d| d * d).sum::<T>().sqrt();
    if !(norm > T::zero()) {
        return Err(invalid("direction must be nonzero"));
    }
    let dir: Vec<T> = direction.iter().map(|&d| d / norm).collect();
    if lambdas.windows(2).any(|w| w[1] <= w[0]) || lambdas.first().is_none_or(|&l| l <= T::zero()) {
        return Err(invalid("lambdas must be positive and strictly increasing"));
    }
    let r = shape.plateau * T::lit(0.25);
    let pts = stencil(x0, r);
    let ns = pts.len();
    let cells: Vec<(T, T)> = (0..lambdas.len() * ns)
        .into_par_iter()
        .map(|idx| {
            let lam = lambdas[idx / ns];
            let xi: Vec<T> = dir.iter().map(|&d| d * lam).collect();
            let (v, s) = u.fbi_at(x0, shape, p, &pts[idx % ns], &xi)?;
            Ok((v.norm(), s))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mags = Vec::with_capacity(lambdas.len());
    let mut floors = Vec::with_capacity(lambdas.len());
    for row in cells.chunks(ns) {
        let m = row.iter().fold(T::zero(), |a, &(v, _)| a.max(v));
        let s = row.iter().fold(T::zero(), |a, &(_, s)| a.max(s));
        if !m.is_finite() {
            return Err(Error::QuadratureNonConvergent("non-finite FBI magnitude".into()));
        }
        mags.push(m);
        floors.push(noise_factor * T::epsilon() * s);
    }
    Ok(RayProfile { x0: x0.to_vec(), direction: dir, lambdas: lambdas.to_vec(), mags, floors, shape, stencil_radius: r })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Regular,
    Singular,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Regular => "REGULAR",
            Verdict::Singular => "SINGULAR",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit<T> {
    pub gamma_hat: T,
    /// `max_j (omega(gamma_hat lambda_j) + log mags_j)`; `-inf` when every
    /// magnitude is below the noise floor.
    pub log_c_hat: T,
    pub coverage: T,
    pub verdict: Verdict,
    /// Number of lambda points above the noise floor.
    pub informative: usize,
}

/// Largest candidate `gamma` whose `log C(gamma)` stays within `kappa` of the
/// peak log magnitude; `coverage = gamma_hat / gamma_ref`.
pub fn fit_omega_decay<T: Real>(profile: &RayProfile<T>, m: &WeightSequence<T>, cfg: &FitConfig) -> Result<DecayFit<T>> {
    cfg.validate()?;
    let n = profile.lambdas.len();
    if n < 8 || profile.mags.len() != n || profile.floors.len() != n {
        return Err(invalid("profile needs at least 8 lambda points"));
    }
    let gammas: Vec<T> = cfg.gammas();
    let reach = *gammas.last().expect("nonempty") * profile.lambdas[n - 1];
    if reach > m.omega_limit() {
        return Err(Error::TruncationExhausted(format!(
            "fit needs omega up to {} but {} is valid only up to {}",
            reach,
            m.name(),
            m.omega_limit()
        )));
    }
    let gamma_ref = T::lit(cfg.gamma_ref);
    let classify = |cov: T| {
        if cov >= T::lit(cfg.tau_reg) {
            Verdict::Regular
        } else if cov <= T::lit(cfg.tau_sing) {
            Verdict::Singular
        } else {
            Verdict::Inconclusive
        }
    };
    let live: Vec<(T, T)> = (0..n)
        .filter(|&j| profile.mags[j] > profile.floors[j])
        .map(|j| (profile.lambdas[j], profile.mags[j].ln()))
        .collect();
    let gmax = *gammas.last().expect("nonempty");
    if live.is_empty() {
        let cov = gmax / gamma_ref;
        return Ok(DecayFit { gamma_hat: gmax, log_c_hat: T::neg_infinity(), coverage: cov, verdict: classify(cov), informative: 0 });
    }
    let peak = live.iter().fold(T::neg_infinity(), |a, &(_, v)| a.max(v));
    let cap = peak + T::lit(cfg.kappa);
    let log_c = |g: T| -> Result<T> {
        let mut best = T::neg_infinity();
        for &(lam, lm) in &live {
            best = best.max(m.omega(g * lam)? + lm);
        }
        Ok(best)
    };
    // log C is nondecreasing in gamma, so the feasible set is a prefix.
    let (mut lo, mut hi) = (0usize, gammas.len());
    if log_c(gammas[0])? > cap {
        let g = gammas[0];
        let cov = g / gamma_ref;
        return Ok(DecayFit { gamma_hat: g, log_c_hat: log_c(g)?, coverage: cov, verdict: classify(cov), informative: live.len() });
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if log_c(gammas[mid])? <= cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = gammas[lo];
    let cov = g / gamma_ref;
    Ok(DecayFit { gamma_hat: g, log_c_hat: log_c(g)?, coverage: cov, verdict: classify(cov), informative: live.len() })
}

/// Directions of the cone grid: `{-1, +1}` in 1D, `n` equally spaced angles
/// in 2D.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeGrid {
    Line,
    Circle(usize),
}

impl ConeGrid {
    pub fn dim(&self) -> usize {
        match self {
            ConeGrid::Line => 1,
            ConeGrid::Circle(_) => 2,
        }
    }

    pub fn directions<T: Real>(&self) -> Vec<Vec<T>> {
        match self {
            ConeGrid::Line => vec![vec![-T::one()], vec![T::one()]],
            ConeGrid::Circle(n) => (0..*n)
                .map(|k| {
                    let th = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(*n);
                    vec![th.cos(), th.sin()]
                })
                .collect(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ConeGrid::Line => "line".into(),
            ConeGrid::Circle(n) => format!("circle:{}", n),
        }
    }

    /// Index of the opposite direction.
    pub fn antipode(&self, i: usize) -> Option<usize> {
        match self {
            ConeGrid::Line => Some(1 - i),
            ConeGrid::Circle(n) if n % 2 == 0 => Some((i + n / 2) % n),
            ConeGrid::Circle(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WavefrontEntry<T> {
    pub x: Vec<T>,
    pub dir: Vec<T>,
    pub fit: std::result::Result<DecayFit<T>, Error>,
}

impl<T: Real> WavefrontEntry<T> {
    pub fn verdict(&self) -> Verdict {
        self.fit.as_ref().map(|f| f.verdict).unwrap_or(Verdict::Inconclusive)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WavefrontEstimate<T> {
    /// Entries in point-major order: `entries[i * ndir + d]`.
    pub entries: Vec<WavefrontEntry<T>>,
    pub points: Vec<Vec<T>>,
    pub weight: String,
    pub cone: ConeGrid,
}

impl<T: Real> WavefrontEstimate<T> {
    pub fn ndir(&self) -> usize {
        self.entries.len() / self.points.len().max(1)
    }

    pub fn verdict(&self, point: usize, dir: usize) -> Verdict {
        self.entries[point * self.ndir() + dir].verdict()
    }

    pub fn singular(&self) -> impl Iterator<Item = &WavefrontEntry<T>> {
        self.entries.iter().filter(|e| e.verdict() == Verdict::Singular)
    }

    /// Entries whose verdict differs from both circular neighbours, which
    /// agree with each other.
    pub fn isolated_flips(&self) -> Vec<(usize, usize)> {
        let ConeGrid::Circle(n) = self.cone else { return vec![] };
        let mut out = Vec::new();
        for p in 0..self.points.len() {
            for d in 0..n {
                let v = self.verdict(p, d);
                let a = self.verdict(p, (d + n - 1) % n);
                let b = self.verdict(p, (d + 1) % n);
                if a == b && v != a {
                    out.push((p, d));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|e| {
                let x: Vec<f64> = e.x.iter().map(|v| v.to_f64_lossy()).collect();
                let dir: Vec<f64> = e.dir.iter().map(|v| v.to_f64_lossy()).collect();
                match &e.fit {
                    Ok(f) => json!({
                        "x": x,
                        "dir": dir,
                        "gamma": f.gamma_hat.to_f64_lossy(),
                        "logC": finite_or_null(f.log_c_hat.to_f64_lossy()),
                        "coverage": f.coverage.to_f64_lossy(),
                        "verdict": f.verdict,
                    }),
                    Err(err) => json!({
                        "x": x,
                        "dir": dir,
                        "gamma": null,
                        "logC": null,
                        "coverage": null,
                        "verdict": Verdict::Inconclusive,
                        "error": err.to_string(),
                    }),
                }
            })
            .collect();
        json!({ "weight": self.weight, "cone": self.cone.describe(), "entries": entries })
    }

    /// Polar plot of coverage against direction at one base point (2D), or a
    /// two-bar chart in 1D.
    pub fn to_svg(&self, point: usize) -> String {
        let size = 320.0;
        let c = size / 2.0;
        let rmax = 130.0;
        let nd = self.ndir();
        let covs: Vec<(f64, f64, Verdict)> = (0..nd)
            .map(|d| {
                let e = &self.entries[point * nd + d];
                let cov = e.fit.as_ref().map(|f| f.coverage.to_f64_lossy()).unwrap_or(0.0);
                let ang = if e.dir.len() == 1 {
                    if e.dir[0] > T::zero() { 0.0 } else { std::f64::consts::PI }
                } else {
                    e.dir[1].to_f64_lossy().atan2(e.dir[0].to_f64_lossy())
                };
                (ang, cov, e.verdict())
            })
            .collect();
        let top = covs.iter().fold(1.0f64, |a, &(_, v, _)| a.max(v));
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
        let _ = writeln!(s, r#"<circle cx="{c}" cy="{c}" r="{rmax}" fill="none" stroke="black" stroke-width="0.5"/>"#);
        for (ang, cov, v) in &covs {
            let r = rmax * cov / top;
            let (x, y) = (c + r * ang.cos(), c - r * ang.sin());
            let color = match v {
                Verdict::Regular => "green",
                Verdict::Singular => "red",
                Verdict::Inconclusive => "gray",
            };
            let _ = writeln!(s, r#"<line x1="{c}" y1="{c}" x2="{x:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#);
        }
        let x: Vec<String> = self.points[point].iter().map(|v| format!("{}", v)).collect();
        let _ = writeln!(s, r#"<text x="4" y="14" font-size="11">x = ({}), {}, coverage scale {:.3}</text>"#, x.join(", "), self.weight, top);
        s.push_str("</svg>\n");
        s
    }
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

/// Profiles and fits over every (point, direction) pair. Per-entry failures
/// are recorded in the entry.
pub fn estimate_wavefront<T: Real, U: Microlocal<T> + ?Sized>(
    u: &U,
    points: &[Vec<T>],
    cone: &ConeGrid,
    m: &WeightSequence<T>,
    p: &EllipticPolynomial<T>,
    cfg: &FitConfig,
) -> Result<WavefrontEstimate<T>> {
    cfg.validate()?;
    if cone.dim() != u.dim() || points.iter().any(|x| x.len() != u.dim()) {
        return Err(Error::GridMismatch("grid dimension differs from the input".into()));
    }
    let dirs: Vec<Vec<T>> = cone.directions();
    let lambdas: Vec<T> = cfg.lambdas();
    let shape = cfg.shape();
    let nd = dirs.len();
    let entries = (0..points.len() * nd)
        .into_par_iter()
        .map(|idx| {
            let x = &points[idx / nd];
            let d = &dirs[idx % nd];
            let fit = directional_profile(u, x, d, &lambdas, shape, p, T::lit(cfg.noise_factor))
                .and_then(|prof| fit_omega_decay(&prof, m, cfg));
            WavefrontEntry { x: x.clone(), dir: d.clone(), fit }
        })
        .collect();
    Ok(WavefrontEstimate { entries, points: points.to_vec(), weight: m.name().to_string(), cone: cone.clone() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionReport<T> {
    pub ok: bool,
    /// `(x, dir)` where `u` at `dir` disagrees with `conj u` at `-dir`.
    pub mismatches: Vec<(Vec<T>, Vec<T>)>,
}

/// Compares `u` at `(x, xi)` with `conj u` at `(x, -xi)`.
pub fn check_reflection<T: Real>(u: &WavefrontEstimate<T>, conj: &WavefrontEstimate<T>) -> Result<ReflectionReport<T>> {
    if u.cone != conj.cone || u.points != conj.points {
        return Err(Error::GridMismatch("estimates were computed on different grids".into()));
    }
    let nd = u.ndir();
    let mut mismatches = Vec::new();
    for p in 0..u.points.len() {
        for d in 0..nd {
            let a = u.cone.antipode(d).ok_or_else(|| Error::GridMismatch("cone grid has no antipodes".into()))?;
            if u.verdict(p, d) != conj.verdict(p, a) {
                let e = &u.entries[p * nd + d];
                mismatches.push((e.x.clone(), e.dir.clone()));
            }
        }
    }
    Ok(ReflectionReport { ok: mismatches.is_empty(), mismatches })
}

/// A diffeomorphism known through its inverse and Jacobian.
pub trait Diffeomorphism<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T]) -> Vec<T>;
    fn inverse(&self, y: &[T]) -> Result<Vec<T>>;
    /// Row-major Jacobian `DF(x)[i][j] = dF_i/dx_j`.
    fn jacobian(&self, x: &[T]) -> Vec<Vec<T>>;
}

/// `F(x) = A x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine<T> {
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
}

impl<T: Real> Affine<T> {
    pub fn one_dim(a: T, b: T) -> Self {
        Affine { a: vec![vec![a]], b: vec![b] }
    }

    fn det(&self) -> T {
        match self.a.len() {
            1 => self.a[0][0],
            _ => self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0],
        }
    }
}

impl<T: Real> Diffeomorphism<T> for Affine<T> {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        self.a.iter().zip(&self.b).map(|(row, &b)| row.iter().zip(x).map(|(&a, &x)| a * x).sum::<T>() + b).collect()
    }

    fn inverse(&self, y: &[T]) -> Result<Vec<T>> {
        let det = self.det();
        if det.abs() <= T::epsilon() {
            return Err(Error::SingularJacobian(self.a.iter().flatten().map(|v| v.to_f64_lossy()).collect()));
        }
        let r: Vec<T> = y.iter().zip(&self.b).map(|(&y, &b)| y - b).collect();
        Ok(match self.a.len() {
            1 => vec![r[0] / det],
            _ => vec![
                (self.a[1][1] * r[0] - self.a[0][1] * r[1]) / det,
                (self.a[0][0] * r[1] - self.a[1][0] * r[0]) / det,
            ],
        })
    }

    fn jacobian(&self, _x: &[T]) -> Vec<Vec<T>> {
        self.a.clone()
    }
}

/// Transports `WF(u)` to `WF(F* u)`: the entry at `y = F(x)` with direction
/// `eta` moves to `x` with direction `DF(x)^T eta / |DF(x)^T eta|`.
pub fn pullback_wavefront<T: Real>(f: &dyn Diffeomorphism<T>, est: &WavefrontEstimate<T>) -> Result<WavefrontEstimate<T>> {
    if f.dim() != est.cone.dim() {
        return Err(Error::GridMismatch("diffeomorphism dimension differs from the estimate".into()));
    }
    let mut points = Vec::with_capacity(est.points.len());
    for y in &est.points {
        points.push(f.inverse(y)?);
    }
    let nd = est.ndir();
    let mut entries = Vec::with_capacity(est.entries.len());
    for (idx, e) in est.entries.iter().enumerate() {
        let x = &points[idx / nd];
        let j = f.jacobian(x);
        let n = x.len();
        let mut v: Vec<T> = (0..n).map(|c| (0..n).map(|r| j[r][c] * e.dir[r]).sum()).collect();
        let norm = v.iter().map(|&a| a * a).sum::<T>().sqrt();
        if !(norm > T::epsilon()) {
            return Err(Error::SingularJacobian(j.iter().flatten().map(|a| a.to_f64_lossy()).collect()));
        }
        v.iter_mut().for_each(|a| *a = *a / norm);
        entries.push(WavefrontEntry { x: x.clone(), dir: v, fit: e.fit.clone() });
    }
    Ok(WavefrontEstimate { entries, points, weight: est.weight.clone(), cone: est.cone.clone() })
}

/// Canonical verdict map keyed by rounded point and direction, for comparing
/// estimates whose entries may be ordered differently.
pub fn verdict_map<T: Real>(est: &WavefrontEstimate<T>) -> std::collections::BTreeMap<(Vec<i64>, Vec<i64>), Verdict> {
    let key = |v: &[T]| v.iter().map(|a| (a.to_f64_lossy() * 1e9).round() as i64).collect::<Vec<_>>();
    est.entries.iter().map(|e| ((key(&e.x), key(&e.dir)), e.verdict())).collect()
}
