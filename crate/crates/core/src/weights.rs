//! Weight sequences `(M_k)` in log form, their weight functions and the
//! truncated tests of regularity, moderate growth and quasianalyticity.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::{ln_factorials, Real};

pub const DEFAULT_K: usize = 64;
pub const LOG_CONVEXITY_TOL: f64 = 1e-12;

/// A truncated weight sequence stored as `log M_0, ..., log M_K`.
///
/// Immutable after construction; every constructor checks `log M_0 = 0`
/// and log-convexity.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence<T> {
    name: String,
    log_m: Vec<T>,
    // log of the quotients M_{j+1}/M_j, j < K
    log_mu: Vec<T>,
    // log m_k = log M_k - log k!
    log_small: Vec<T>,
    // log of m_{j+1}/m_j
    log_small_q: Vec<T>,
    small_monotone: bool,
}

impl<T: Real> WeightSequence<T> {
    /// Validates and stores a log-domain sequence.
    pub fn from_log(name: impl Into<String>, log_m: Vec<T>) -> Result<Self> {
        let name = name.into();
        if log_m.len() < 9 {
            return Err(invalid(format!("truncation order K = {} < 8", log_m.len().saturating_sub(1))));
        }
        if log_m.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite log M_k"));
        }
        let scale = log_m.iter().fold(T::one(), |a, v| a.max(v.abs()));
        let tol = T::lit(LOG_CONVEXITY_TOL).max(T::epsilon() * scale * T::lit(8.0));
        if log_m[0].abs() > tol {
            return Err(invalid("log M_0 must be 0"));
        }
        for j in 1..log_m.len() - 1 {
            let defect = log_m[j] + log_m[j] - log_m[j - 1] - log_m[j + 1];
            if defect > tol {
                return Err(Error::NotLogConvex { index: j, defect: defect.to_f64_lossy() });
            }
        }
        let k = log_m.len() - 1;
        let mut log_mu: Vec<T> = (0..k).map(|j| log_m[j + 1] - log_m[j]).collect();
        // Clamp rounding-level dips so binary searches see a monotone sequence.
        for j in 1..k {
            if log_mu[j] < log_mu[j - 1] {
                log_mu[j] = log_mu[j - 1];
            }
        }
        let lf = ln_factorials::<T>(k);
        let log_small: Vec<T> = (0..=k).map(|j| log_m[j] - lf[j]).collect();
        let log_small_q: Vec<T> = (0..k).map(|j| log_small[j + 1] - log_small[j]).collect();
        let small_monotone = log_small_q.windows(2).all(|w| w[1] >= w[0] - tol);
        Ok(WeightSequence { name, log_m, log_mu, log_small, log_small_q, small_monotone })
    }

    /// Gevrey sequence `M_k = (k!)^{s+1}`.
    pub fn gevrey(s: T, k: usize) -> Result<Self> {
        if !(s >= T::zero()) {
            return Err(invalid("gevrey parameter s must be >= 0"));
        }
        let s1 = s + T::one();
        let log_m = ln_factorials::<T>(k).into_iter().map(|v| s1 * v).collect();
        Self::from_log(format!("gevrey:{}", s), log_m)
    }

    /// `N_k = k! (log(k+e))^{sigma k}` for `k >= 2`, `N_0 = N_1 = 1`.
    pub fn log_bracket(sigma: T, k: usize) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(invalid("log_bracket parameter sigma must be > 0"));
        }
        let lf = ln_factorials::<T>(k);
        let log_m = (0..=k)
            .map(|j| {
                if j < 2 {
                    T::zero()
                } else {
                    let jf = T::from_usize_lossy(j);
                    lf[j] + sigma * jf * (jf + T::E()).ln().ln()
                }
            })
            .collect();
        Self::from_log(format!("log_bracket:{}", sigma), log_m)
    }

    /// `L_k = k! 2^{k^2}` for `k >= 2`, `L_0 = L_1 = 1`.
    pub fn superquadratic(k: usize) -> Result<Self> {
        let lf = ln_factorials::<T>(k);
        let log_m = (0..=k)
            .map(|j| {
                if j < 2 {
                    T::zero()
                } else {
                    let jf = T::from_usize_lossy(j);
                    lf[j] + jf * jf * T::LN_2()
                }
            })
            .collect();
        Self::from_log("superquadratic", log_m)
    }

    /// `M_k = 1` for all k: log-convex but below the analytic class.
    pub fn constant_one(k: usize) -> Result<Self> {
        Self::from_log("one", vec![T::zero(); k + 1])
    }

    /// `M_k h^k`; keeps `M_0 = 1`.
    pub fn rescaled(&self, h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(invalid("rescaling factor must be > 0"));
        }
        let lh = h.ln();
        let log_m = self.log_m.iter().enumerate().map(|(k, &v)| v + T::from_usize_lossy(k) * lh).collect();
        Self::from_log(format!("{}*{}^k", self.name, h), log_m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Truncation order K.
    pub fn order(&self) -> usize {
        self.log_m.len() - 1
    }

    pub fn log_m(&self) -> &[T] {
        &self.log_m
    }

    /// `log m_k = log(M_k / k!)`.
    pub fn log_small_m(&self) -> &[T] {
        &self.log_small
    }

    /// `log mu_j = log(M_{j+1}/M_j)`, `j < K`.
    pub fn log_mu(&self) -> &[T] {
        &self.log_mu
    }

    /// `log(m_{j+1}/m_j)`, `j < K`.
    pub fn log_small_quotients(&self) -> &[T] {
        &self.log_small_q
    }

    pub fn small_quotients_monotone(&self) -> bool {
        self.small_monotone
    }

    /// `log L_k = log(M_k)/k` for `k >= 1`.
    pub fn log_l(&self, k: usize) -> T {
        self.log_m[k] / T::from_usize_lossy(k)
    }

    /// Largest `t` accepted by [`omega`](Self::omega): `mu_{K-1}`.
    pub fn omega_limit(&self) -> T {
        self.log_mu[self.order() - 1].exp()
    }

    /// Largest `t` accepted by [`omega_tilde`](Self::omega_tilde).
    pub fn omega_tilde_limit(&self) -> T {
        self.log_small_q[self.order() - 1].exp()
    }

    /// Smallest `t` accepted by [`small_h`](Self::small_h).
    pub fn small_h_floor(&self) -> T {
        (-self.log_small_q[self.order() - 1]).exp()
    }

    /// Smallest `t` accepted by [`h_tilde`](Self::h_tilde).
    pub fn h_tilde_floor(&self) -> T {
        (-self.log_mu[self.order() - 1]).exp()
    }

    /// `omega_M(t) = max_j (j log t - log M_j)`.
    pub fn omega(&self, t: T) -> Result<T> {
        Ok(self.omega_argmax(t)?.1)
    }

    /// Maximizing index and value of `omega_M(t)`.
    pub fn omega_argmax(&self, t: T) -> Result<(usize, T)> {
        check_positive(t)?;
        let lt = t.ln();
        let k = self.order();
        if lt > self.log_mu[k - 1] {
            return Err(Error::TruncationExhausted(format!(
                "omega at t = {} beyond mu_(K-1) = {}",
                t,
                self.log_mu[k - 1].exp()
            )));
        }
        let j = self.log_mu.partition_point(|&q| q <= lt);
        Ok((j, T::from_usize_lossy(j) * lt - self.log_m[j]))
    }

    /// `omega~_M(t) = max_j (j log t - log m_j)`.
    pub fn omega_tilde(&self, t: T) -> Result<T> {
        check_positive(t)?;
        let lt = t.ln();
        let k = self.order();
        if self.small_monotone {
            if lt > self.log_small_q[k - 1] {
                return Err(Error::TruncationExhausted(format!("omega_tilde at t = {}", t)));
            }
            let j = self.log_small_q.partition_point(|&q| q <= lt);
            Ok(T::from_usize_lossy(j) * lt - self.log_small[j])
        } else {
            let (j, v) = argmax_linear(&self.log_small, lt);
            if j == k && lt > self.log_small_q[k - 1] {
                return Err(Error::TruncationExhausted(format!("omega_tilde at t = {}", t)));
            }
            Ok(v)
        }
    }

    /// `log h_M(t) = min_k (k log t + log m_k)`.
    pub fn log_small_h(&self, t: T) -> Result<T> {
        check_positive(t)?;
        let lt = t.ln();
        let k = self.order();
        let idx = if self.small_monotone {
            // First index where adding one more order stops decreasing the value.
            self.log_small_q.partition_point(|&q| q + lt < T::zero())
        } else {
            argmin_linear(&self.log_small, lt)
        };
        if idx == k && self.log_small_q[k - 1] + lt < T::zero() {
            return Err(Error::TruncationExhausted(format!("h_M at t = {}: minimum sits at k = K", t)));
        }
        Ok(T::from_usize_lossy(idx) * lt + self.log_small[idx])
    }

    pub fn small_h(&self, t: T) -> Result<T> {
        Ok(self.log_small_h(t)?.exp())
    }

    /// `log h~_M(t) = min_k (k log t + log M_k)`.
    pub fn log_h_tilde(&self, t: T) -> Result<T> {
        check_positive(t)?;
        let lt = t.ln();
        let k = self.order();
        let idx = self.log_mu.partition_point(|&q| q + lt < T::zero());
        if idx == k && self.log_mu[k - 1] + lt < T::zero() {
            return Err(Error::TruncationExhausted(format!("h~_M at t = {}: minimum sits at k = K", t)));
        }
        Ok(T::from_usize_lossy(idx) * lt + self.log_m[idx])
    }

    pub fn h_tilde(&self, t: T) -> Result<T> {
        Ok(self.log_h_tilde(t)?.exp())
    }

    /// Max deviation in `log h_M(t) = -omega~_M(1/t)` and
    /// `log h~_M(t) = -omega_M(1/t)` over the grid.
    pub fn duality_check(&self, grid: &[T]) -> Result<T> {
        let mut dev = T::zero();
        for &t in grid {
            let a = self.log_small_h(t)? + self.omega_tilde(t.recip())?;
            let b = self.log_h_tilde(t)? + self.omega(t.recip())?;
            dev = dev.max(a.abs()).max(b.abs());
        }
        Ok(dev)
    }

    /// Truncated checks of (M1)-(M4). Never fails.
    pub fn check_regular(&self) -> RegularityReport {
        let k = self.order();
        let tol = T::lit(1e-9);
        let m1_ok = self.log_small[0].abs() <= tol && self.log_small[1].abs() <= tol;

        // (M2): (m_{j+1}/m_j)^{1/j}, j >= 1
        let m2: Vec<T> = (1..k).map(|j| self.log_small_q[j] / T::from_usize_lossy(j)).collect();
        let head_end = (3 * m2.len()) / 4;
        let head = m2[..head_end].iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let tail = m2[head_end..].iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let sup = head.max(tail);
        let m2_ok = sup.is_finite() && tail <= head + tol;
        let m2_witness = sup.exp().max(T::one());

        let m3_ok = self.log_small_q.windows(2).all(|w| w[1] >= w[0] - tol);

        let trend_log: Vec<T> = (1..k).map(|j| self.log_small[j] / T::from_usize_lossy(j)).collect();
        let half = trend_log.len() / 2;
        let second = &trend_log[half..];
        let nondecreasing = second.windows(2).all(|w| w[1] >= w[0] - tol);
        let grows = second.last().copied().unwrap_or(T::zero()) > second[0] + tol;
        let m4_ok = nondecreasing && grows;

        RegularityReport {
            m1_ok,
            m2_ok,
            m3_ok,
            m4_ok,
            m2_witness: m2_witness.to_f64_lossy(),
            m4_trend: trend_log.iter().map(|v| v.exp().to_f64_lossy()).collect(),
            caveat: TRUNCATION_CAVEAT,
        }
    }

    /// Truncated test of `M_{j+k} <= C rho^{j+k} M_j M_k`.
    pub fn check_moderate_growth(&self) -> ModerateGrowth {
        let k = self.order();
        // D(n) = max_{j+l=n} (log M_n - log M_j - log M_l)
        let d: Vec<T> = (0..=k)
            .map(|n| {
                (0..=n).map(|j| self.log_m[n] - self.log_m[j] - self.log_m[n - j]).fold(T::neg_infinity(), T::max)
            })
            .collect();
        let head = slope(&d, k / 4, k / 2);
        let tail = slope(&d, k / 2, k);
        let ok = tail <= T::lit(1.25) * head + T::lit(0.1);
        let n0 = k / 2;
        let mut log_rho = T::zero();
        for n in n0 + 1..=k {
            log_rho = log_rho.max((d[n] - d[n0]) / T::from_usize_lossy(n - n0));
        }
        let log_c = (0..=k)
            .map(|n| d[n] - T::from_usize_lossy(n) * log_rho)
            .fold(T::zero(), T::max);
        ModerateGrowth {
            ok,
            c: log_c.exp().to_f64_lossy(),
            rho: log_rho.exp().to_f64_lossy(),
            head_slope: head.to_f64_lossy(),
            tail_slope: tail.to_f64_lossy(),
        }
    }

    /// Denjoy-Carleman classification from the tail of `a_k = M_{k-1}/M_k`.
    pub fn quasianalytic(&self) -> QuasianalyticityVerdict {
        quasianalytic_impl(self)
    }

    /// `M <= N`: `sup_k (M_k/N_k)^{1/k}` bounded on the truncation.
    pub fn precedes(&self, other: &Self) -> Result<Precedence> {
        let k = self.order();
        if other.order() != k {
            return Err(Error::MismatchedTruncation(k, other.order()));
        }
        let w: Vec<T> = (1..=k).map(|j| (self.log_m[j] - other.log_m[j]) / T::from_usize_lossy(j)).collect();
        let half = k / 2;
        let head = w[..half].iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let tail = w[half..].iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let tol = T::lit(1e-9) * (T::one() + head.abs());
        Ok(Precedence {
            ok: tail <= head + tol,
            witness: head.max(tail).exp().to_f64_lossy(),
            caveat: TRUNCATION_CAVEAT,
        })
    }

    pub fn equivalent(&self, other: &Self) -> Result<bool> {
        Ok(self.precedes(other)?.ok && other.precedes(self)?.ok)
    }

    /// Plain-text table: header `name K`, then `k logM_k` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.name.replace(char::is_whitespace, "_"), self.order());
        for (k, v) in self.log_m.iter().enumerate() {
            s.push_str(&format!("{} {:.17e}\n", k, v.to_f64_lossy()));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { pos: 0, msg: "empty input".into() })?;
        let mut parts = header.split_whitespace();
        let name = parts.next().ok_or(Error::Parse { pos: 0, msg: "missing name".into() })?.to_string();
        let k: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or(Error::Parse { pos: 0, msg: "missing truncation order".into() })?;
        let mut log_m = vec![T::nan(); k + 1];
        for (line_no, line) in lines {
            let mut it = line.split_whitespace();
            let idx: usize = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or(Error::Parse { pos: line_no, msg: format!("bad index in `{}`", line) })?;
            let val: f64 = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or(Error::Parse { pos: line_no, msg: format!("bad value in `{}`", line) })?;
            if idx > k {
                return Err(Error::Parse { pos: line_no, msg: format!("index {} > K = {}", idx, k) });
            }
            log_m[idx] = T::lit(val);
        }
        if let Some(missing) = log_m.iter().position(|v| v.is_nan()) {
            return Err(Error::Parse { pos: 0, msg: format!("missing entry k = {}", missing) });
        }
        Self::from_log(name, log_m)
    }
}

fn check_positive<T: Real>(t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("t must be positive and finite, got {}", t)))
    }
}

fn argmax_linear<T: Real>(seq: &[T], lt: T) -> (usize, T) {
    let mut best = (0, T::neg_infinity());
    for (j, &v) in seq.iter().enumerate() {
        let val = T::from_usize_lossy(j) * lt - v;
        if val > best.1 {
            best = (j, val);
        }
    }
    best
}

fn argmin_linear<T: Real>(seq: &[T], lt: T) -> usize {
    let mut best = (0, T::infinity());
    for (j, &v) in seq.iter().enumerate() {
        let val = T::from_usize_lossy(j) * lt + v;
        if val < best.1 {
            best = (j, val);
        }
    }
    best.0
}

/// Least-squares slope of `d[n]` against `n` over `lo..=hi`.
fn slope<T: Real>(d: &[T], lo: usize, hi: usize) -> T {
    let pts: Vec<(T, T)> = (lo..=hi).map(|n| (T::from_usize_lossy(n), d[n])).collect();
    let m = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / m;
    let my = pts.iter().map(|p| p.1).sum::<T>() / m;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    sxy / sxx
}

pub const TRUNCATION_CAVEAT: &str =
    "asymptotic condition tested on a finite truncation only; raw witness data reported";

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub m1_ok: bool,
    pub m2_ok: bool,
    pub m3_ok: bool,
    pub m4_ok: bool,
    pub m2_witness: f64,
    pub m4_trend: Vec<f64>,
    pub caveat: &'static str,
}

impl RegularityReport {
    pub fn all_ok(&self) -> bool {
        self.m1_ok && self.m2_ok && self.m3_ok && self.m4_ok
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModerateGrowth {
    pub ok: bool,
    #[serde(rename = "C")]
    pub c: f64,
    pub rho: f64,
    pub head_slope: f64,
    pub tail_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Precedence {
    pub ok: bool,
    pub witness: f64,
    pub caveat: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Summability {
    Divergent,
    Convergent,
    Inconclusive,
}

impl fmt::Display for Summability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Summability::Divergent => "DIVERGENT",
            Summability::Convergent => "CONVERGENT",
            Summability::Inconclusive => "INCONCLUSIVE",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasianalyticityVerdict {
    /// `S_K = sum_{k<=K} M_{k-1}/M_k`, one entry per K.
    pub partial_sums: Vec<f64>,
    pub classification: Summability,
    /// Fitted `(alpha, beta)` of `a_k ~ c k^{-alpha} (log k)^{-beta}`.
    pub alpha: f64,
    pub beta: f64,
    pub residual_rms: f64,
    pub caveat: &'static str,
}

/// Band around `alpha = 1` inside which the exponent is snapped to 1 and
/// the logarithmic exponent decides.
pub const ALPHA_SNAP: f64 = 0.03;
pub const FIT_RESIDUAL_MAX: f64 = 1e-2;

fn quasianalytic_impl<T: Real>(m: &WeightSequence<T>) -> QuasianalyticityVerdict {
    let k = m.order();
    // a_k = 1/mu_{k-1} for k = 1..=K
    let log_a: Vec<f64> = (1..=k).map(|j| -(m.log_m[j] - m.log_m[j - 1]).to_f64_lossy()).collect();
    let mut partial = Vec::with_capacity(k);
    let mut s = 0.0;
    for la in &log_a {
        s += la.exp();
        partial.push(s);
    }

    let lo = (k / 4).max(3);
    let rows: Vec<(f64, f64)> = (lo..=k).map(|j| (j as f64, log_a[j - 1])).collect();
    // log a = c - alpha log k - beta log log(k+e)
    let x3: Vec<Vec<f64>> = rows.iter().map(|&(j, _)| vec![1.0, -j.ln(), -(j + std::f64::consts::E).ln().ln()]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (c3, res3) = least_squares(&x3, &y);
    let mut alpha = c3[1];
    let mut beta = c3[2];
    let mut rms = res3;
    if (alpha - 1.0).abs() <= ALPHA_SNAP {
        // alpha = 1: log a + log k = c - beta log log k - g / log k
        alpha = 1.0;
        let x: Vec<Vec<f64>> = rows.iter().map(|&(j, _)| vec![1.0, -j.ln().ln(), -1.0 / j.ln()]).collect();
        let y1: Vec<f64> = rows.iter().map(|&(j, la)| la + j.ln()).collect();
        let (c, res) = least_squares(&x, &y1);
        beta = c[1];
        rms = res;
    }
    let classification = if !rms.is_finite() || rms > FIT_RESIDUAL_MAX {
        Summability::Inconclusive
    } else if alpha < 1.0 || (alpha == 1.0 && beta <= 1.0) {
        Summability::Divergent
    } else {
        Summability::Convergent
    };
    QuasianalyticityVerdict {
        partial_sums: partial,
        classification,
        alpha,
        beta,
        residual_rms: rms,
        caveat: TRUNCATION_CAVEAT,
    }
}

/// Ordinary least squares through the normal equations (tiny systems only).
/// Returns coefficients and residual RMS.
pub(crate) fn least_squares(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let p = x[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    let coef = solve_dense(a);
    let mut ss = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let fit: f64 = row.iter().zip(&coef).map(|(a, b)| a * b).sum();
        ss += (yi - fit) * (yi - fit);
    }
    (coef, (ss / y.len() as f64).sqrt())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        if d == 0.0 {
            continue;
        }
        for r in col + 1..n {
            let f = a[r][col] / d;
            for c in col..=n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = a[r][n];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = if a[r][r] != 0.0 { s / a[r][r] } else { 0.0 };
    }
    x
}

/// Recovers `log M_k = sup_u (k u - omega(e^u))` by golden-section search
/// over `u = log t` in `[u_lo, u_hi]`.
pub fn recover_log_m<T, F>(omega: F, k: usize, u_lo: T, u_hi: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    let kf = T::from_usize_lossy(k);
    let obj = |u: T| -> Result<T> { Ok(kf * u - omega(u.exp())?) };
    let g = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let (mut a, mut b) = (u_lo, u_hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = obj(c)?;
    let mut fd = obj(d)?;
    let tol = T::lit(1e-11).max(T::epsilon() * T::lit(16.0));
    let mut iters = 0;
    while (b - a) > tol * (T::one() + a.abs().max(b.abs())) && iters < 400 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = obj(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = obj(d)?;
        }
        iters += 1;
    }
    let u = (a + b) * T::lit(0.5);
    let best = obj(u)?.max(fc).max(fd);
    // A maximizer pinned to the range edge with the objective still rising
    // means the sup lies outside the supplied range.
    let step = (u_hi - u_lo) * T::lit(1e-6);
    let scale = T::one() + best.abs();
    let slack = T::lit(1e-9) * scale;
    if u - u_lo < step * T::lit(10.0) && obj(u_lo)? > obj(u_lo + step)? + slack {
        return Err(Error::TruncationExhausted("sup of k log t - omega(t) at lower range edge".into()));
    }
    if u_hi - u < step * T::lit(10.0) && obj(u_hi)? > obj(u_hi - step)? + slack {
        return Err(Error::TruncationExhausted("sup of k log t - omega(t) at upper range edge".into()));
    }
    Ok(best)
}

pub fn recover_m<T, F>(omega: F, k: usize, u_lo: T, u_hi: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    Ok(recover_log_m(omega, k, u_lo, u_hi)?.exp())
}

/// Weight function sampled on a grid in `log t`, linearly interpolated.
#[derive(Clone, Debug)]
pub struct TabulatedOmega<T> {
    log_t: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> TabulatedOmega<T> {
    pub fn new(log_t: Vec<T>, values: Vec<T>) -> Result<Self> {
        if log_t.len() != values.len() || log_t.len() < 2 {
            return Err(invalid("tabulated omega needs matching samples, at least two"));
        }
        if log_t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("tabulated omega grid must be increasing"));
        }
        Ok(TabulatedOmega { log_t, values })
    }

    /// Tabulates `omega_M` on `n` points uniformly spaced in `[u_lo, u_hi]`.
    pub fn from_weight(m: &WeightSequence<T>, u_lo: T, u_hi: T, n: usize) -> Result<Self> {
        let h = (u_hi - u_lo) / T::from_usize_lossy(n - 1);
        let log_t: Vec<T> = (0..n).map(|i| u_lo + h * T::from_usize_lossy(i)).collect();
        let values = log_t.iter().map(|&u| m.omega(u.exp())).collect::<Result<Vec<_>>>()?;
        Self::new(log_t, values)
    }

    pub fn range(&self) -> (T, T) {
        (self.log_t[0], *self.log_t.last().unwrap())
    }

    pub fn eval(&self, t: T) -> Result<T> {
        let u = t.ln();
        let (lo, hi) = self.range();
        if !(u >= lo && u <= hi) {
            return Err(Error::TruncationExhausted(format!("tabulated omega queried at t = {}", t)));
        }
        let i = self.log_t.partition_point(|&x| x <= u).clamp(1, self.log_t.len() - 1);
        let (u0, u1) = (self.log_t[i - 1], self.log_t[i]);
        let w = (u - u0) / (u1 - u0);
        Ok(self.values[i - 1] * (T::one() - w) + self.values[i] * w)
    }
}

/// Named family plus truncation order, e.g. `gevrey:1@256`.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    Gevrey { s: f64, k: Option<usize> },
    LogBracket { sigma: f64, k: Option<usize> },
    Superquadratic { k: Option<usize> },
    One { k: Option<usize> },
    File(String),
}

impl WeightSpec {
    pub fn with_order(&self, order: usize) -> Self {
        match self.clone() {
            WeightSpec::Gevrey { s, .. } => WeightSpec::Gevrey { s, k: Some(order) },
            WeightSpec::LogBracket { sigma, .. } => WeightSpec::LogBracket { sigma, k: Some(order) },
            WeightSpec::Superquadratic { .. } => WeightSpec::Superquadratic { k: Some(order) },
            WeightSpec::One { .. } => WeightSpec::One { k: Some(order) },
            f @ WeightSpec::File(_) => f,
        }
    }

    pub fn explicit_order(&self) -> Option<usize> {
        match self {
            WeightSpec::Gevrey { k, .. }
            | WeightSpec::LogBracket { k, .. }
            | WeightSpec::Superquadratic { k }
            | WeightSpec::One { k } => *k,
            WeightSpec::File(_) => None,
        }
    }

    pub fn build<T: Real>(&self) -> Result<WeightSequence<T>> {
        match self {
            WeightSpec::Gevrey { s, k } => WeightSequence::gevrey(T::lit(*s), k.unwrap_or(DEFAULT_K)),
            WeightSpec::LogBracket { sigma, k } => WeightSequence::log_bracket(T::lit(*sigma), k.unwrap_or(DEFAULT_K)),
            WeightSpec::Superquadratic { k } => WeightSequence::superquadratic(k.unwrap_or(DEFAULT_K)),
            WeightSpec::One { k } => WeightSequence::constant_one(k.unwrap_or(DEFAULT_K)),
            WeightSpec::File(path) => {
                let text = std::fs::read_to_string(path)?;
                WeightSequence::from_text(&text)
            }
        }
    }

    /// Builds with the smallest doubling of the order whose `omega` range
    /// reaches `t_max` (explicit orders are respected as given).
    pub fn build_covering<T: Real>(&self, t_max: T) -> Result<WeightSequence<T>> {
        if self.explicit_order().is_some() || matches!(self, WeightSpec::File(_)) {
            return self.build();
        }
        let mut k = DEFAULT_K;
        loop {
            let m: WeightSequence<T> = self.with_order(k).build()?;
            if m.omega_limit() >= t_max || k >= 1 << 16 {
                return Ok(m);
            }
            k *= 2;
        }
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(WeightSpec::File(path.to_string()));
        }
        let (body, k) = match s.find('@') {
            Some(at) => {
                let k: usize = s[at + 1..]
                    .parse()
                    .map_err(|_| Error::Parse { pos: at + 1, msg: "truncation order must be an integer".into() })?;
                (&s[..at], Some(k))
            }
            None => (s, None),
        };
        let (name, param) = match body.find(':') {
            Some(c) => (&body[..c], Some((c + 1, &body[c + 1..]))),
            None => (body, None),
        };
        let num = |p: Option<(usize, &str)>| -> Result<f64> {
            let (pos, txt) = p.ok_or(Error::Parse { pos: name.len(), msg: format!("`{}` needs a parameter", name) })?;
            txt.parse::<f64>().map_err(|_| Error::Parse { pos, msg: format!("bad number `{}`", txt) })
        };
        match name {
            "gevrey" => Ok(WeightSpec::Gevrey { s: num(param)?, k }),
            "log_bracket" => Ok(WeightSpec::LogBracket { sigma: num(param)?, k }),
            "superquadratic" => Ok(WeightSpec::Superquadratic { k }),
            "one" => Ok(WeightSpec::One { k }),
            _ => Err(Error::Parse { pos: 0, msg: format!("unknown weight family `{}`", name) }),
        }
    }
}
