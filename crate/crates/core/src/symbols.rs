//! Polynomial symbols in `(x, xi)`: principal parts, characteristic sets,
//! Hamiltonian flows, Poisson and Lie brackets, bracket-generating rank.
//!
//! Arithmetic is exact over the coefficient type (rationals by default);
//! evaluation happens in `f64`.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::wavefront::{Verdict, WavefrontEstimate};

/// Coefficient ring of a [`Polynomial`].
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
    /// Integer or decimal literal.
    fn parse_number(s: &str) -> Option<Self>;
    fn div_int(&self, d: i64) -> Option<Self>;
    fn imag_unit() -> Option<Self>;
    fn to_c64(&self) -> Complex<f64>;
    fn render(&self) -> String;
}

impl Coeff for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn parse_number(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn div_int(&self, d: i64) -> Option<Self> {
        (d != 0).then(|| self / d as f64)
    }
    fn imag_unit() -> Option<Self> {
        None
    }
    fn to_c64(&self) -> Complex<f64> {
        Complex::new(*self, 0.0)
    }
    fn render(&self) -> String {
        format!("{}", self)
    }
}

fn parse_rational(s: &str) -> Option<Rational64> {
    let (int, frac) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int.len() + frac.len() > 18 || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    let digits = format!("{}{}", int, frac);
    let num: i64 = digits.parse().ok()?;
    let den = 10i64.checked_pow(frac.len() as u32)?;
    Some(Rational64::new(num, den))
}

impl Coeff for Rational64 {
    fn from_i64(v: i64) -> Self {
        Rational64::from_integer(v)
    }
    fn parse_number(s: &str) -> Option<Self> {
        parse_rational(s)
    }
    fn div_int(&self, d: i64) -> Option<Self> {
        (d != 0).then(|| self / Rational64::from_integer(d))
    }
    fn imag_unit() -> Option<Self> {
        None
    }
    fn to_c64(&self) -> Complex<f64> {
        Complex::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn render(&self) -> String {
        format!("{}", self)
    }
}

impl Coeff for Complex<f64> {
    fn from_i64(v: i64) -> Self {
        Complex::new(v as f64, 0.0)
    }
    fn parse_number(s: &str) -> Option<Self> {
        s.parse::<f64>().ok().map(|v| Complex::new(v, 0.0))
    }
    fn div_int(&self, d: i64) -> Option<Self> {
        (d != 0).then(|| self / d as f64)
    }
    fn imag_unit() -> Option<Self> {
        Some(Complex::i())
    }
    fn to_c64(&self) -> Complex<f64> {
        *self
    }
    fn render(&self) -> String {
        render_complex(self.re, self.im, |v| format!("{}", v))
    }
}

impl Coeff for Complex<Rational64> {
    fn from_i64(v: i64) -> Self {
        Complex::new(Rational64::from_integer(v), Rational64::zero())
    }
    fn parse_number(s: &str) -> Option<Self> {
        parse_rational(s).map(|v| Complex::new(v, Rational64::zero()))
    }
    fn div_int(&self, d: i64) -> Option<Self> {
        (d != 0).then(|| Complex::new(self.re / d, self.im / d))
    }
    fn imag_unit() -> Option<Self> {
        Some(Complex::new(Rational64::zero(), Rational64::one()))
    }
    fn to_c64(&self) -> Complex<f64> {
        Complex::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
    fn render(&self) -> String {
        render_complex(self.re, self.im, |v| format!("{}", v))
    }
}

fn render_complex<R: Zero + PartialEq + Copy>(re: R, im: R, f: impl Fn(R) -> String) -> String {
    if im.is_zero() {
        f(re)
    } else if re.is_zero() {
        format!("{}*i", f(im))
    } else {
        format!("({} + {}*i)", f(re), f(im))
    }
}

/// Sparse polynomial: exponent vector -> nonzero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, C>,
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn monomial(nvars: usize, exps: Vec<u32>, c: C) -> Self {
        assert_eq!(exps.len(), nvars, "exponent length");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        Polynomial { nvars, terms }
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, C::one())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert_add(&mut self, e: Vec<u32>, c: C) {
        let entry = self.terms.entry(e);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            out.insert_add(e.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.nvars, C::one()), |a, _| &a * self)
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.insert_add(f, v.clone() * C::from_i64(e[i] as i64));
            }
        }
        out
    }

    /// Total degree in the variables `vars`.
    pub fn degree_in(&self, vars: std::ops::Range<usize>) -> Option<u32> {
        self.terms.keys().map(|e| e[vars.clone()].iter().sum()).max()
    }

    /// Keeps the terms of degree exactly `d` in `vars`.
    pub fn homogeneous_part(&self, vars: std::ops::Range<usize>, d: u32) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e[vars.clone()].iter().sum::<u32>() == d)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex<f64> {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(x).fold(c.to_c64(), |a, (&k, &v)| a * v.powi(k as i32)))
            .sum()
    }

    /// Real value; fails if any coefficient has an imaginary part.
    pub fn eval_real(&self, x: &[f64]) -> Result<f64> {
        if self.terms.values().any(|c| c.to_c64().im != 0.0) {
            return Err(Error::Unsupported("complex coefficients in a real flow".into()));
        }
        Ok(self.eval(x).re)
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let mut cs = c.render();
            let neg = cs.starts_with('-');
            if neg {
                cs.remove(0);
            }
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { names[i].clone() } else { format!("{}^{}", names[i], p) })
                .collect();
            if mono.is_empty() {
                s.push_str(&cs);
            } else if cs == "1" {
                s.push_str(&mono.join("*"));
            } else {
                let _ = write!(s, "{}*{}", cs, mono.join("*"));
            }
        }
        s
    }
}

impl<C: Coeff> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, o: &Polynomial<C>) -> Polynomial<C> {
        assert_eq!(self.nvars, o.nvars, "variable count");
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }
}

impl<C: Coeff> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, o: &Polynomial<C>) -> Polynomial<C> {
        assert_eq!(self.nvars, o.nvars, "variable count");
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.insert_add(e.clone(), -c.clone());
        }
        out
    }
}

impl<C: Coeff> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        self.scale(&-C::one())
    }
}

impl<C: Coeff> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, o: &Polynomial<C>) -> Polynomial<C> {
        assert_eq!(self.nvars, o.nvars, "variable count");
        let mut out = Polynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert_add(e, c1.clone() * c2.clone());
            }
        }
        out
    }
}

/// Variable names for parsing and printing.
#[derive(Clone, Debug, PartialEq)]
pub struct VarNames {
    pub names: Vec<String>,
    aliases: Vec<(String, usize)>,
}

impl VarNames {
    /// `x1..xn, xi1..xin`, with `x, y` and `xi, eta` as aliases.
    pub fn phase_space(n: usize) -> Self {
        let mut names: Vec<String> = (1..=n).map(|i| format!("x{}", i)).collect();
        names.extend((1..=n).map(|i| format!("xi{}", i)));
        let mut aliases = vec![("x".to_string(), 0), ("xi".to_string(), n)];
        if n >= 2 {
            aliases.push(("y".into(), 1));
            aliases.push(("eta".into(), n + 1));
        }
        VarNames { names, aliases }
    }

    /// `x1..xn` with `x, y` aliases.
    pub fn space(n: usize) -> Self {
        let names: Vec<String> = (1..=n).map(|i| format!("x{}", i)).collect();
        let mut aliases = vec![("x".to_string(), 0)];
        if n >= 2 {
            aliases.push(("y".into(), 1));
        }
        VarNames { names, aliases }
    }

    fn lookup(&self, id: &str) -> Option<usize> {
        self.names.iter().position(|n| n == id).or_else(|| self.aliases.iter().find(|(a, _)| a == id).map(|(_, i)| *i))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Id(String),
    Op(char),
}

fn tokenize(s: &str, offset: usize) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let b: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let st = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == '.') {
                i += 1;
            }
            out.push((offset + st, Tok::Num(b[st..i].iter().collect())));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == '_') {
                i += 1;
            }
            out.push((offset + st, Tok::Id(b[st..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((offset + i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse { pos: offset + i, msg: format!("unexpected character '{}'", c) });
        }
    }
    Ok(out)
}

struct Parser<'a, C> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    names: &'a VarNames,
    _c: std::marker::PhantomData<C>,
}

impl<C: Coeff> Parser<'_, C> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn nv(&self) -> usize {
        self.names.names.len()
    }

    fn expr(&mut self) -> Result<Polynomial<C>> {
        let mut neg = false;
        if let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            neg = *c == '-';
            self.at += 1;
        }
        let mut acc = self.term()?;
        if neg {
            acc = -&acc;
        }
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let minus = *c == '-';
            self.at += 1;
            let t = self.term()?;
            acc = if minus { &acc - &t } else { &acc + &t };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial<C>> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.at += 1;
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                Some(Tok::Op('/')) => {
                    self.at += 1;
                    let Some(Tok::Num(n)) = self.peek().cloned() else { return self.err("expected integer divisor") };
                    let d: i64 = match n.parse() {
                        Ok(d) if d != 0 => d,
                        _ => return self.err("divisor must be a nonzero integer"),
                    };
                    self.at += 1;
                    let mut out = Polynomial::zero(self.nv());
                    for (e, c) in acc.terms() {
                        match c.div_int(d) {
                            Some(v) => out.insert_add(e.clone(), v),
                            None => return self.err("division failed"),
                        }
                    }
                    acc = out;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Polynomial<C>> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.at += 1;
            let Some(Tok::Num(n)) = self.peek().cloned() else { return self.err("expected integer exponent") };
            let k: u32 = match n.parse() {
                Ok(k) if k <= 64 => k,
                _ => return self.err("exponent must be an integer in 0..=64"),
            };
            self.at += 1;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial<C>> {
        let nv = self.nv();
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                let Some(c) = C::parse_number(&s) else { return self.err(format!("bad number '{}'", s)) };
                self.at += 1;
                Ok(Polynomial::constant(nv, c))
            }
            Some(Tok::Id(id)) => {
                if id == "i" {
                    let Some(c) = C::imag_unit() else { return self.err("imaginary unit needs complex coefficients") };
                    self.at += 1;
                    return Ok(Polynomial::constant(nv, c));
                }
                let Some(k) = self.names.lookup(&id) else { return self.err(format!("unknown variable '{}'", id)) };
                self.at += 1;
                Ok(Polynomial::var(nv, k))
            }
            Some(Tok::Op('(')) => {
                self.at += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::Op(')')) {
                    return self.err("expected ')'");
                }
                self.at += 1;
                Ok(e)
            }
            Some(Tok::Op('-')) => {
                self.at += 1;
                Ok(-&self.power()?)
            }
            _ => self.err("expected a number, variable or '('"),
        }
    }
}

fn parse_at<C: Coeff>(text: &str, names: &VarNames, offset: usize) -> Result<Polynomial<C>> {
    let toks = tokenize(text, offset)?;
    let mut p = Parser { toks, at: 0, end: offset + text.len(), names, _c: std::marker::PhantomData };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parses `2*x1^2*xi2 - xi1^3`-style text.
pub fn parse_polynomial<C: Coeff>(text: &str, names: &VarNames) -> Result<Polynomial<C>> {
    parse_at(text, names, 0)
}

/// `nu x nu` matrix of polynomials in `(x_1..x_n, xi_1..xi_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySymbol<C> {
    n: usize,
    nu: usize,
    entries: Vec<Polynomial<C>>,
}

impl<C: Coeff> PolySymbol<C> {
    pub fn new(n: usize, nu: usize, entries: Vec<Polynomial<C>>) -> Result<Self> {
        if nu == 0 || entries.len() != nu * nu || entries.iter().any(|p| p.nvars() != 2 * n) {
            return Err(invalid("symbol needs nu*nu entries in 2n variables"));
        }
        Ok(PolySymbol { n, nu, entries })
    }

    pub fn scalar(n: usize, p: Polynomial<C>) -> Result<Self> {
        Self::new(n, 1, vec![p])
    }

    /// Rows separated by `;`, entries by `|`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let names = VarNames::phase_space(n);
        let mut entries = Vec::new();
        let mut rows = 0;
        let mut width = None;
        let mut offset = 0;
        for row in text.split(';') {
            let mut cols = 0;
            let mut roff = offset;
            for cell in row.split('|') {
                entries.push(parse_at(cell, &names, roff)?);
                roff += cell.len() + 1;
                cols += 1;
            }
            if *width.get_or_insert(cols) != cols {
                return Err(Error::Parse { pos: offset, msg: "rows have different lengths".into() });
            }
            rows += 1;
            offset += row.len() + 1;
        }
        if width != Some(rows) {
            return Err(Error::Parse { pos: 0, msg: format!("matrix is {}x{}, not square", rows, width.unwrap_or(0)) });
        }
        Self::new(n, rows, entries)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.nu
    }

    pub fn entry(&self, j: usize, k: usize) -> &Polynomial<C> {
        &self.entries[j * self.nu + k]
    }

    fn xi_range(&self) -> std::ops::Range<usize> {
        self.n..2 * self.n
    }

    /// Largest total `xi`-degree over the entries.
    pub fn order(&self) -> u32 {
        self.entries.iter().filter_map(|p| p.degree_in(self.xi_range())).max().unwrap_or(0)
    }

    /// Keeps the terms of `xi`-degree equal to the order.
    pub fn principal_part(&self) -> Self {
        let m = self.order();
        PolySymbol {
            n: self.n,
            nu: self.nu,
            entries: self.entries.iter().map(|p| p.homogeneous_part(self.xi_range(), m)).collect(),
        }
    }

    /// Symbolic determinant by cofactor expansion (`nu <= 3`).
    pub fn determinant(&self) -> Result<Polynomial<C>> {
        let e = |j: usize, k: usize| self.entry(j, k);
        match self.nu {
            1 => Ok(e(0, 0).clone()),
            2 => Ok(&(e(0, 0) * e(1, 1)) - &(e(0, 1) * e(1, 0))),
            3 => {
                let m = |a: usize, b: usize, c: usize, d: usize| &(e(1, a) * e(2, b)) - &(e(1, c) * e(2, d));
                let t0 = e(0, 0) * &m(1, 2, 2, 1);
                let t1 = e(0, 1) * &m(0, 2, 2, 0);
                let t2 = e(0, 2) * &m(0, 1, 1, 0);
                Ok(&(&t0 - &t1) + &t2)
            }
            nu => Err(Error::Unsupported(format!("determinant of a {}x{} system", nu, nu))),
        }
    }

    /// Entrywise magnitude `sum_alpha |c_alpha(x)| |xi|^{|alpha|}`.
    fn entry_magnitude(&self, p: &Polynomial<C>, x: &[f64], xi_norm: f64) -> f64 {
        let mut groups: BTreeMap<Vec<u32>, Complex<f64>> = BTreeMap::new();
        for (e, c) in p.terms() {
            let xpart = e[..self.n].iter().zip(x).fold(c.to_c64(), |a, (&k, &v)| a * v.powi(k as i32));
            *groups.entry(e[self.n..].to_vec()).or_insert(Complex::zero()) += xpart;
        }
        groups.iter().map(|(a, v)| v.norm() * xi_norm.powi(a.iter().sum::<u32>() as i32)).sum()
    }

    /// `(Frobenius norm of the entry magnitudes)^nu` at `(x, xi)`.
    pub fn scale_at(&self, x: &[f64], xi: &[f64]) -> f64 {
        let xn = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let fro = self.entries.iter().map(|p| self.entry_magnitude(p, x, xn).powi(2)).sum::<f64>().sqrt();
        fro.powi(self.nu as i32)
    }

    fn point(x: &[f64], xi: &[f64]) -> Vec<f64> {
        x.iter().chain(xi).copied().collect()
    }
}

/// Directions for the characteristic scan: `{-1, +1}` in 1D, `n` equally
/// spaced angles in 2D.
pub fn direction_grid(dim: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    match dim {
        1 => Ok(vec![vec![-1.0], vec![1.0]]),
        2 => {
            if n == 0 || n % 8 != 0 {
                return Err(invalid("2D direction count must be a positive multiple of 8"));
            }
            Ok((0..n)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / n as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect())
        }
        _ => Err(Error::Unsupported(format!("dimension {}", dim))),
    }
}

pub const CHAR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CharSample {
    pub points: Vec<(Vec<f64>, Vec<f64>)>,
    pub detvals: Vec<f64>,
    pub scales: Vec<f64>,
    pub mask: Vec<bool>,
    pub tol: f64,
}

impl CharSample {
    pub fn characteristic(&self) -> impl Iterator<Item = &(Vec<f64>, Vec<f64>)> {
        self.points.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(p, _)| p)
    }

    pub fn is_characteristic(&self, x: &[f64], dir: &[f64]) -> Option<bool> {
        self.points
            .iter()
            .position(|(px, pd)| close(px, x) && close(pd, dir))
            .map(|i| self.mask[i])
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-9 * (1.0 + u.abs()))
}

/// `|det p_m(x, xi)| <= tol * scale` on the grid, with `p_m` the principal part.
pub fn char_set<C: Coeff>(p: &PolySymbol<C>, xs: &[Vec<f64>], dirs: &[Vec<f64>], tol: f64) -> Result<CharSample> {
    let pm = p.principal_part();
    let det = pm.determinant()?;
    if xs.iter().any(|x| x.len() != p.dim()) || dirs.iter().any(|d| d.len() != p.dim()) {
        return Err(Error::GridMismatch("grid dimension differs from the symbol".into()));
    }
    let mut out = CharSample { points: vec![], detvals: vec![], scales: vec![], mask: vec![], tol };
    for x in xs {
        for d in dirs {
            let v = det.eval(&PolySymbol::<C>::point(x, d)).norm();
            let s = pm.scale_at(x, d);
            out.points.push((x.clone(), d.clone()));
            out.detvals.push(v);
            out.scales.push(s);
            out.mask.push(v <= tol * s);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InclusionReport {
    /// `(x, dir)` singular for `u`, regular for `Pu`, and non-characteristic.
    pub violations: Vec<(Vec<f64>, Vec<f64>)>,
    pub checked: usize,
    pub ok: bool,
}

/// Checks `WF u ⊆ WF(Pu) ∪ Char P` entrywise. Only a SINGULAR verdict for
/// `u` against a REGULAR verdict for `Pu` counts; INCONCLUSIVE never does.
pub fn elliptic_inclusion_check(wf_u: &WavefrontEstimate<f64>, wf_pu: &WavefrontEstimate<f64>, ch: &CharSample) -> Result<InclusionReport> {
    if wf_u.points != wf_pu.points || wf_u.cone != wf_pu.cone {
        return Err(Error::GridMismatch("wavefront estimates on different grids".into()));
    }
    let mut violations = Vec::new();
    for (a, b) in wf_u.entries.iter().zip(&wf_pu.entries) {
        let Some(is_char) = ch.is_characteristic(&a.x, &a.dir) else {
            return Err(Error::GridMismatch(format!("no characteristic sample at x = {:?}, dir = {:?}", a.x, a.dir)));
        };
        if a.verdict() == Verdict::Singular && b.verdict() == Verdict::Regular && !is_char {
            violations.push((a.x.clone(), a.dir.clone()));
        }
    }
    Ok(InclusionReport { ok: violations.is_empty(), checked: wf_u.entries.len(), violations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoncharReport {
    pub noncharacteristic: bool,
    pub det: f64,
    pub scale: f64,
    pub note: String,
}

/// Whether `{phi = 0}` is non-characteristic at `x0`: `det p_m(x0, dphi(x0)) != 0`.
pub fn noncharacteristic_surface<C: Coeff>(p: &PolySymbol<C>, grad: &[f64], x0: &[f64], tol: f64) -> Result<NoncharReport> {
    if grad.len() != p.dim() || x0.len() != p.dim() {
        return Err(Error::GridMismatch("gradient or point has the wrong dimension".into()));
    }
    let g = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(g > 0.0) {
        return Err(Error::VanishingGradient(grad.to_vec()));
    }
    let pm = p.principal_part();
    let det = pm.determinant()?.eval(&PolySymbol::<C>::point(x0, grad)).norm();
    let scale = pm.scale_at(x0, grad);
    let nonchar = det > tol * scale;
    let note = if nonchar {
        "non-characteristic at x0: for quasianalytic-coefficient P, a solution vanishing on one side of the surface vanishes near x0"
    } else {
        "characteristic at x0: the uniqueness statement does not apply"
    };
    Ok(NoncharReport { noncharacteristic: nonchar, det, scale, note: note.to_string() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub ok: bool,
    /// Largest `|q_j| / |xi|^{deg}` over characteristic samples.
    pub worst: f64,
    pub samples: usize,
    pub note: String,
}

/// Sampled admissibility: each `q_j` (scalar polynomial in `(x, xi)`)
/// vanishes on the characteristic samples to tolerance.
pub fn admissibility<C: Coeff>(qs: &[Polynomial<C>], ch: &CharSample, tol: f64) -> AdmissibilityReport {
    let mut worst = 0.0f64;
    let mut samples = 0;
    for (x, d) in ch.characteristic() {
        samples += 1;
        let pt: Vec<f64> = x.iter().chain(d).copied().collect();
        for q in qs {
            worst = worst.max(q.eval(&pt).norm());
        }
    }
    AdmissibilityReport {
        ok: worst <= tol,
        worst,
        samples,
        note: "checked on sampled characteristic points only, not algebraically".into(),
    }
}

/// Polynomial vector field: one component per variable.
pub type VectorField<C> = Vec<Polynomial<C>>;

/// `H_p = (dp/dxi, -dp/dx)` on `2n` variables.
pub fn hamiltonian_field<C: Coeff>(p: &Polynomial<C>, n: usize) -> Result<VectorField<C>> {
    if p.nvars() != 2 * n {
        return Err(invalid("symbol must be in 2n variables"));
    }
    let mut out: Vec<Polynomial<C>> = (0..n).map(|j| p.derivative(n + j)).collect();
    out.extend((0..n).map(|j| -&p.derivative(j)));
    Ok(out)
}

/// `{p, q} = sum_j dp/dxi_j dq/dx_j - dp/dx_j dq/dxi_j`.
pub fn poisson_bracket<C: Coeff>(p: &Polynomial<C>, q: &Polynomial<C>, n: usize) -> Result<Polynomial<C>> {
    if p.nvars() != 2 * n || q.nvars() != 2 * n {
        return Err(invalid("symbols must be in 2n variables"));
    }
    let mut acc = Polynomial::zero(2 * n);
    for j in 0..n {
        let a = &p.derivative(n + j) * &q.derivative(j);
        let b = &p.derivative(j) * &q.derivative(n + j);
        acc = &acc + &(&a - &b);
    }
    Ok(acc)
}

/// `X(f) = sum_j X_j df/dx_j`.
pub fn apply_field<C: Coeff>(x: &VectorField<C>, f: &Polynomial<C>) -> Polynomial<C> {
    x.iter().enumerate().fold(Polynomial::zero(f.nvars()), |acc, (j, xj)| &acc + &(xj * &f.derivative(j)))
}

/// `[X, Y]_k = X(Y_k) - Y(X_k)`.
pub fn lie_bracket<C: Coeff>(x: &VectorField<C>, y: &VectorField<C>) -> Result<VectorField<C>> {
    if x.len() != y.len() || x.iter().chain(y).any(|p| p.nvars() != x.len()) {
        return Err(invalid("vector fields must have matching dimension"));
    }
    Ok((0..x.len()).map(|k| &apply_field(x, &y[k]) - &apply_field(y, &x[k])).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldSystem<C> {
    pub nvars: usize,
    pub fields: Vec<VectorField<C>>,
}

impl<C: Coeff> VectorFieldSystem<C> {
    pub fn new(nvars: usize, fields: Vec<VectorField<C>>) -> Result<Self> {
        if fields.iter().any(|f| f.len() != nvars || f.iter().any(|p| p.nvars() != nvars)) {
            return Err(invalid("inconsistent variable count in vector fields"));
        }
        Ok(VectorFieldSystem { nvars, fields })
    }

    /// Fields separated by `;`, components by `,`, e.g. `1, 0; 0, x`.
    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        let names = VarNames::space(nvars);
        let mut fields = Vec::new();
        let mut offset = 0;
        for f in text.split(';') {
            let mut comps = Vec::new();
            let mut o = offset;
            for c in f.split(',') {
                comps.push(parse_at(c, &names, o)?);
                o += c.len() + 1;
            }
            if comps.len() != nvars {
                return Err(Error::Parse { pos: offset, msg: format!("field has {} components, expected {}", comps.len(), nvars) });
            }
            fields.push(comps);
            offset += f.len() + 1;
        }
        Self::new(nvars, fields)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FiniteTypeReport {
    /// Rank of the span of all brackets of length `<= l`, for `l = 1..=r`.
    pub rank_by_length: Vec<usize>,
    pub type_length: Option<usize>,
}

pub const MAX_BRACKET_LENGTH: usize = 6;

/// Rank filtration of right-normed brackets `[X_i1, [X_i2, ... X_il]]` at `x0`.
pub fn finite_type<C: Coeff>(s: &VectorFieldSystem<C>, x0: &[f64], r: usize) -> Result<FiniteTypeReport> {
    if r == 0 || r > MAX_BRACKET_LENGTH {
        return Err(invalid(format!("bracket length must be in 1..={}", MAX_BRACKET_LENGTH)));
    }
    if x0.len() != s.nvars {
        return Err(Error::GridMismatch("point dimension differs from the system".into()));
    }
    let mut level: Vec<VectorField<C>> = s.fields.clone();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut ranks = Vec::new();
    let mut type_length = None;
    for l in 1..=r {
        if l > 1 {
            let mut next = Vec::new();
            for x in &s.fields {
                for b in &level {
                    let v = lie_bracket(x, b)?;
                    if v.iter().any(|p| !p.is_zero()) {
                        next.push(v);
                    }
                }
            }
            level = next;
        }
        for f in &level {
            vectors.push(f.iter().map(|p| p.eval(x0).re).collect());
        }
        let rank = numeric_rank(&vectors, s.nvars);
        ranks.push(rank);
        if rank == s.nvars && type_length.is_none() {
            type_length = Some(l);
        }
    }
    Ok(FiniteTypeReport { rank_by_length: ranks, type_length })
}

/// Rank by Gaussian elimination with partial pivoting, relative tolerance
/// `1e-9` against the largest entry.
pub fn numeric_rank(rows: &[Vec<f64>], ncols: usize) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let big = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if big == 0.0 {
        return 0;
    }
    let tol = 1e-9 * big;
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..a.len()).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())) else { break };
        if a[piv][col].abs() <= tol {
            continue;
        }
        a.swap(rank, piv);
        for i in 0..a.len() {
            if i != rank {
                let f = a[i][col] / a[rank][col];
                for c in col..ncols {
                    a[i][c] -= f * a[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub n: usize,
    /// `(t, state)` with `state = (x, xi)`.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub drift: Vec<f64>,
    pub max_drift: f64,
    /// `p(start)` vanished to tolerance, so this is a bicharacteristic
    /// rather than just an integral curve of `H_p`.
    pub is_bicharacteristic: bool,
}

impl Curve {
    /// CSV `t,x1..,xi1..,p_drift`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 1..=self.n {
            let _ = write!(s, ",x{}", i);
        }
        for i in 1..=self.n {
            let _ = write!(s, ",xi{}", i);
        }
        s.push_str(",p_drift\n");
        for ((t, st), d) in self.samples.iter().zip(&self.drift) {
            let _ = write!(s, "{:.17e}", t);
            for v in st {
                let _ = write!(s, ",{:.17e}", v);
            }
            let _ = writeln!(s, ",{:.17e}", d);
        }
        s
    }
}

/// Classical RK4 integration of `H_p` from `(x0, xi0)` over `[0, t_end]`.
pub fn bicharacteristic<C: Coeff>(p: &Polynomial<C>, n: usize, x0: &[f64], xi0: &[f64], t_end: f64, step: f64, tol: f64) -> Result<Curve> {
    if x0.len() != n || xi0.len() != n {
        return Err(invalid("start point has the wrong dimension"));
    }
    if !(step > 0.0 && t_end >= 0.0) {
        return Err(invalid("need step > 0 and t_end >= 0"));
    }
    let h = hamiltonian_field(p, n)?;
    let rhs = |s: &[f64]| -> Result<Vec<f64>> { h.iter().map(|c| c.eval_real(s)).collect() };
    let mut state: Vec<f64> = x0.iter().chain(xi0).copied().collect();
    let p0 = p.eval_real(&state)?;
    let scale = {
        let ps: PolySymbol<C> = PolySymbol::scalar(n, p.clone())?;
        ps.scale_at(x0, xi0).max(f64::MIN_POSITIVE)
    };
    let steps = (t_end / step).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut samples = vec![(0.0, state.clone())];
    let mut drift = vec![0.0];
    let axpy = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> { a.iter().zip(k).map(|(u, v)| u + c * v).collect() };
    for i in 1..=steps {
        let k1 = rhs(&state)?;
        let k2 = rhs(&axpy(&state, &k1, dt / 2.0))?;
        let k3 = rhs(&axpy(&state, &k2, dt / 2.0))?;
        let k4 = rhs(&axpy(&state, &k3, dt))?;
        for j in 0..state.len() {
            state[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t = i as f64 * dt;
        if state.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
            return Err(Error::Blowup(t));
        }
        drift.push((p.eval_real(&state)? - p0).abs());
        samples.push((t, state.clone()));
    }
    let max_drift = drift.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(Curve { n, samples, drift, max_drift, is_bicharacteristic: p0.abs() <= tol * scale })
}
