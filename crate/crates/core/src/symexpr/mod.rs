//! Exact scalar functions on a coordinate chart.
//!
//! A [`ScalarFn`] is a finite rational combination of basis functions
//!
//! ```text
//! x^p * exp(e . x) * T(c . x),   T in {1, sin, cos}
//! ```
//!
//! with rational slope vectors `e`, `c`. Sine/cosine atoms are normalized to a
//! lexicographically positive `c`, so distinct keys are linearly independent
//! functions and zero-testing reduces to an empty term map.

mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use parse::{parse_expr, Expr, Func};

/// Exact rational coefficients.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p`, `p/q`, `-p/q` or a finite decimal into an exact rational.
pub fn parse_rational(text: &str) -> Option<Q> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let neg = int.starts_with('-');
        let int_abs = int.trim_start_matches('-');
        let digits = format!("{}{}", if int_abs.is_empty() { "0" } else { int_abs }, frac);
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let v = Q::new(n, d);
        return Some(if neg { -v } else { v });
    }
    text.parse::<BigInt>().ok().map(Q::from_integer)
}

pub(crate) fn fmt_q(v: &Q) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// A coordinate chart: ordered coordinate names, some of them circle
/// coordinates with period 2*pi.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    name: String,
    coords: Vec<String>,
    periodic: Vec<bool>,
}

impl Chart {
    pub fn new(name: impl Into<String>, coords: &[(&str, bool)]) -> Result<Self> {
        let coords: Vec<(String, bool)> = coords.iter().map(|(c, p)| (c.to_string(), *p)).collect();
        Self::from_owned(name.into(), coords)
    }

    pub fn from_owned(name: String, coords: Vec<(String, bool)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (c, _) in &coords {
            if c.is_empty() || !c.chars().all(|ch| ch.is_alphanumeric() || ch == '_') {
                return Err(Error::InvalidChart(format!("bad coordinate name `{c}`")));
            }
            if c == "pi" || matches!(c.as_str(), "sin" | "cos" | "exp") {
                return Err(Error::InvalidChart(format!("reserved coordinate name `{c}`")));
            }
            if !seen.insert(c.clone()) {
                return Err(Error::InvalidChart(format!("duplicate coordinate `{c}`")));
            }
        }
        let (coords, periodic) = coords.into_iter().unzip();
        Ok(Self { name, coords, periodic })
    }

    /// The zero-dimensional chart (a point).
    pub fn point(name: impl Into<String>) -> Self {
        Self { name: name.into(), coords: vec![], periodic: vec![] }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &str {
        &self.coords[i]
    }

    pub fn is_periodic(&self, i: usize) -> bool {
        self.periodic[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn var(&self, name: &str) -> Result<ScalarFn> {
        let i = self.index_of(name).ok_or_else(|| Error::UnknownCoordinate(name.to_string()))?;
        Ok(ScalarFn::var(self.dim(), i))
    }

    /// Parses and canonicalizes an expression in this chart's coordinates.
    pub fn parse(&self, text: &str) -> Result<ScalarFn> {
        let expr = parse_expr(text, self)?;
        expr.canonicalize(self.dim())
    }
}

/// Trigonometric part of a basis function.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trig {
    One,
    Sin(Vec<Q>),
    Cos(Vec<Q>),
}

/// A basis function `x^powers * exp(exp . x) * trig`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub powers: Vec<u32>,
    pub exp: Vec<Q>,
    pub trig: Trig,
}

impl Key {
    fn one(dim: usize) -> Self {
        Self { powers: vec![0; dim], exp: vec![Q::zero(); dim], trig: Trig::One }
    }

    pub fn is_one(&self) -> bool {
        self.trig == Trig::One && self.powers.iter().all(|p| *p == 0) && self.exp.iter().all(Zero::is_zero)
    }

    pub fn is_polynomial(&self) -> bool {
        self.trig == Trig::One && self.exp.iter().all(Zero::is_zero)
    }
}

fn is_lex_positive(c: &[Q]) -> bool {
    c.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_positive())
}

fn add_vec(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub_vec(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn neg_vec(a: &[Q]) -> Vec<Q> {
    a.iter().map(|x| -x).collect()
}

/// `sin(c.x)` in canonical form as `(sign, trig)`, or `None` when it vanishes.
fn sin_atom(c: Vec<Q>) -> Option<(Q, Trig)> {
    if c.iter().all(Zero::is_zero) {
        None
    } else if is_lex_positive(&c) {
        Some((Q::one(), Trig::Sin(c)))
    } else {
        Some((-Q::one(), Trig::Sin(neg_vec(&c))))
    }
}

fn cos_atom(c: Vec<Q>) -> (Q, Trig) {
    if c.iter().all(Zero::is_zero) {
        (Q::one(), Trig::One)
    } else if is_lex_positive(&c) {
        (Q::one(), Trig::Cos(c))
    } else {
        (Q::one(), Trig::Cos(neg_vec(&c)))
    }
}

/// Product of two trigonometric parts as a short list of `(coefficient, trig)`.
fn trig_product(a: &Trig, b: &Trig) -> Vec<(Q, Trig)> {
    let half = qr(1, 2);
    match (a, b) {
        (Trig::One, t) | (t, Trig::One) => vec![(Q::one(), t.clone())],
        (Trig::Sin(u), Trig::Sin(v)) => {
            // sin u sin v = (cos(u-v) - cos(u+v)) / 2
            let (s1, t1) = cos_atom(sub_vec(u, v));
            let (s2, t2) = cos_atom(add_vec(u, v));
            vec![(&half * s1, t1), (-&half * s2, t2)]
        }
        (Trig::Sin(u), Trig::Cos(v)) | (Trig::Cos(v), Trig::Sin(u)) => {
            // sin u cos v = (sin(u+v) + sin(u-v)) / 2
            let mut out = Vec::new();
            if let Some((s, t)) = sin_atom(add_vec(u, v)) {
                out.push((&half * s, t));
            }
            if let Some((s, t)) = sin_atom(sub_vec(u, v)) {
                out.push((&half * s, t));
            }
            out
        }
        (Trig::Cos(u), Trig::Cos(v)) => {
            let (s1, t1) = cos_atom(sub_vec(u, v));
            let (s2, t2) = cos_atom(add_vec(u, v));
            vec![(&half * s1, t1), (&half * s2, t2)]
        }
    }
}

/// Exact trig/exp polynomial with rational coefficients on a chart of fixed dimension.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarFn {
    dim: usize,
    terms: BTreeMap<Key, Q>,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        write!(f, "ScalarFn({})", self.render(&names))
    }
}

impl ScalarFn {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Q::one())
    }

    pub fn constant(dim: usize, c: Q) -> Self {
        let mut f = Self::zero(dim);
        f.add_term(Key::one(dim), c);
        f
    }

    pub fn int(dim: usize, n: i64) -> Self {
        Self::constant(dim, q(n))
    }

    pub fn var(dim: usize, i: usize) -> Self {
        assert!(i < dim, "coordinate index {i} out of range for dimension {dim}");
        let mut key = Key::one(dim);
        key.powers[i] = 1;
        let mut f = Self::zero(dim);
        f.add_term(key, Q::one());
        f
    }

    /// `exp(slope . x)`.
    pub fn exp_linear(slope: Vec<Q>) -> Self {
        let dim = slope.len();
        let mut key = Key::one(dim);
        key.exp = slope;
        let mut f = Self::zero(dim);
        f.add_term(key, Q::one());
        f
    }

    pub fn sin_linear(slope: Vec<Q>) -> Self {
        let dim = slope.len();
        let mut f = Self::zero(dim);
        if let Some((s, t)) = sin_atom(slope) {
            let mut key = Key::one(dim);
            key.trig = t;
            f.add_term(key, s);
        }
        f
    }

    pub fn cos_linear(slope: Vec<Q>) -> Self {
        let dim = slope.len();
        let (s, t) = cos_atom(slope);
        let mut key = Key::one(dim);
        key.trig = t;
        let mut f = Self::zero(dim);
        f.add_term(key, s);
        f
    }

    /// Builds a function from raw terms, canonicalizing trig atoms.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Key, Q)>) -> Self {
        let mut f = Self::zero(dim);
        for (mut key, c) in terms {
            assert_eq!(key.powers.len(), dim);
            let (s, t) = match std::mem::replace(&mut key.trig, Trig::One) {
                Trig::One => (Q::one(), Trig::One),
                Trig::Sin(v) => match sin_atom(v) {
                    Some(st) => st,
                    None => continue,
                },
                Trig::Cos(v) => cos_atom(v),
            };
            key.trig = t;
            f.add_term(key, c * s);
        }
        f
    }

    fn add_term(&mut self, key: Key, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The value if this is a constant function.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (k, c) = self.terms.iter().next().unwrap();
                k.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(Key::is_polynomial)
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.dim);
        }
        Self { dim: self.dim, terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.dim);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Inverse when the function is a unit: a nonzero constant times `exp(e . x)`.
    pub fn unit_inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (k, c) = self.terms.iter().next().unwrap();
        if k.trig != Trig::One || k.powers.iter().any(|p| *p != 0) {
            return None;
        }
        let mut key = Key::one(self.dim);
        key.exp = neg_vec(&k.exp);
        let mut f = Self::zero(self.dim);
        f.add_term(key, c.recip());
        Some(f)
    }

    pub fn is_unit(&self) -> bool {
        self.unit_inverse().is_some()
    }

    /// Exact division by a unit.
    pub fn div_unit(&self, d: &ScalarFn) -> Result<Self> {
        let inv = d.unit_inverse().ok_or_else(|| Error::NotAUnit(d.render_plain()))?;
        Ok(self * &inv)
    }

    pub fn partial(&self, j: usize) -> Self {
        assert!(j < self.dim);
        let mut out = Self::zero(self.dim);
        for (k, c) in &self.terms {
            if k.powers[j] > 0 {
                let mut key = k.clone();
                key.powers[j] -= 1;
                out.add_term(key, c * q(k.powers[j] as i64));
            }
            if !k.exp[j].is_zero() {
                out.add_term(k.clone(), c * &k.exp[j]);
            }
            match &k.trig {
                Trig::One => {}
                Trig::Sin(v) if !v[j].is_zero() => {
                    let mut key = k.clone();
                    key.trig = Trig::Cos(v.clone());
                    out.add_term(key, c * &v[j]);
                }
                Trig::Cos(v) if !v[j].is_zero() => {
                    let mut key = k.clone();
                    key.trig = Trig::Sin(v.clone());
                    out.add_term(key, -(c * &v[j]));
                }
                _ => {}
            }
        }
        out
    }

    pub fn partial_named(&self, chart: &Chart, coord: &str) -> Result<Self> {
        let j = chart.index_of(coord).ok_or_else(|| Error::UnknownCoordinate(coord.to_string()))?;
        Ok(self.partial(j))
    }

    /// Returns `(slope, constant)` when the function is rational-affine.
    pub fn as_affine(&self) -> Option<(Vec<Q>, Q)> {
        let mut slope = vec![Q::zero(); self.dim];
        let mut constant = Q::zero();
        for (k, c) in &self.terms {
            if !k.is_polynomial() {
                return None;
            }
            let deg: u32 = k.powers.iter().sum();
            match deg {
                0 => constant = c.clone(),
                1 => {
                    let j = k.powers.iter().position(|p| *p == 1).unwrap();
                    slope[j] = c.clone();
                }
                _ => return None,
            }
        }
        Some((slope, constant))
    }

    /// Composition `f o phi`, where `basemap[k]` is the k-th coordinate of
    /// `phi` expressed on the source chart.
    pub fn substitute(&self, basemap: &[ScalarFn]) -> Result<Self> {
        if basemap.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("substitution needs {} components, got {}", self.dim, basemap.len())));
        }
        match basemap.first() {
            Some(g) => self.substitute_in(basemap, g.dim),
            None => Ok(self.clone()),
        }
    }

    /// `substitute` with an explicit source dimension, so that functions on a
    /// point can be pulled back to any chart.
    pub fn substitute_in(&self, basemap: &[ScalarFn], src_dim: usize) -> Result<Self> {
        if basemap.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("substitution needs {} components, got {}", self.dim, basemap.len())));
        }
        if basemap.iter().any(|g| g.dim != src_dim) {
            return Err(Error::DimensionMismatch("base map components on different charts".into()));
        }
        let linear_image = |c: &[Q]| -> Result<Option<Vec<Q>>> {
            if c.iter().all(Zero::is_zero) {
                return Ok(None);
            }
            let mut acc = ScalarFn::zero(src_dim);
            for (ck, g) in c.iter().zip(basemap) {
                if !ck.is_zero() {
                    acc = &acc + &g.scale(ck);
                }
            }
            match acc.as_affine() {
                Some((slope, k)) if k.is_zero() => Ok(Some(slope)),
                Some(_) => Err(Error::ClosureViolation("atom argument acquires a nonzero constant phase".into())),
                None => Err(Error::ClosureViolation("atom argument is not rational-linear after substitution".into())),
            }
        };
        let mut out = ScalarFn::zero(src_dim);
        for (k, c) in &self.terms {
            let mut term = ScalarFn::constant(src_dim, c.clone());
            for (p, g) in k.powers.iter().zip(basemap) {
                if *p > 0 {
                    term = &term * &g.pow(*p);
                }
            }
            if let Some(slope) = linear_image(&k.exp)? {
                term = &term * &ScalarFn::exp_linear(slope);
            }
            match &k.trig {
                Trig::One => {}
                Trig::Sin(v) => {
                    let atom = match linear_image(v)? {
                        Some(s) => ScalarFn::sin_linear(s),
                        None => ScalarFn::zero(src_dim),
                    };
                    term = &term * &atom;
                }
                Trig::Cos(v) => {
                    let atom = match linear_image(v)? {
                        Some(s) => ScalarFn::cos_linear(s),
                        None => ScalarFn::one(src_dim),
                    };
                    term = &term * &atom;
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Whether the function is single-valued on the chart: periodic
    /// coordinates occur only inside sine/cosine atoms with integer slope.
    pub fn is_periodic_valid(&self, chart: &Chart) -> bool {
        self.terms.keys().all(|k| {
            (0..self.dim).filter(|j| chart.is_periodic(*j)).all(|j| {
                k.powers[j] == 0
                    && k.exp[j].is_zero()
                    && match &k.trig {
                        Trig::One => true,
                        Trig::Sin(v) | Trig::Cos(v) => v[j].is_integer(),
                    }
            })
        })
    }

    /// Floating-point evaluation; used only for sampling-based checks.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.dim, "point dimension mismatch");
        let dot = |v: &[Q]| -> f64 { v.iter().zip(point).map(|(c, x)| c.to_f64().unwrap_or(f64::NAN) * x).sum() };
        self.terms
            .iter()
            .map(|(k, c)| {
                let mut v = c.to_f64().unwrap_or(f64::NAN);
                for (p, x) in k.powers.iter().zip(point) {
                    v *= x.powi(*p as i32);
                }
                if k.exp.iter().any(|e| !e.is_zero()) {
                    v *= dot(&k.exp).exp();
                }
                match &k.trig {
                    Trig::One => {}
                    Trig::Sin(c) => v *= dot(c).sin(),
                    Trig::Cos(c) => v *= dot(c).cos(),
                }
                v
            })
            .sum()
    }

    pub fn evaluate_q(&self, point: &[Q]) -> f64 {
        let p: Vec<f64> = point.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        self.evaluate(&p)
    }

    /// Exact value at a rational point, available when every transcendental
    /// atom has a vanishing argument there.
    pub fn evaluate_exact(&self, point: &[Q]) -> Option<Q> {
        assert_eq!(point.len(), self.dim);
        let dot = |v: &[Q]| -> Q { v.iter().zip(point).map(|(c, x)| c * x).sum() };
        let mut total = Q::zero();
        for (k, c) in &self.terms {
            let mut v = c.clone();
            for (p, x) in k.powers.iter().zip(point) {
                v *= num_traits::pow(x.clone(), *p as usize);
            }
            if !dot(&k.exp).is_zero() {
                return None;
            }
            match &k.trig {
                Trig::One => {}
                Trig::Sin(c) => {
                    if !dot(c).is_zero() {
                        return None;
                    }
                    v = Q::zero();
                }
                Trig::Cos(c) => {
                    if !dot(c).is_zero() {
                        return None;
                    }
                }
            }
            total += v;
        }
        Some(total)
    }

    /// Renders the function in the expression grammar using the chart's names.
    pub fn display<'a>(&'a self, chart: &'a Chart) -> impl fmt::Display + 'a {
        Rendered { f: self, names: chart.coords() }
    }

    pub fn render(&self, names: &[String]) -> String {
        Rendered { f: self, names }.to_string()
    }

    fn render_plain(&self) -> String {
        let names: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        self.render(&names)
    }
}

struct Rendered<'a> {
    f: &'a ScalarFn,
    names: &'a [String],
}

fn render_linear(v: &[Q], names: &[String]) -> String {
    let mut out = String::new();
    for (c, n) in v.iter().zip(names) {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let a = c.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if a.is_one() {
            out.push_str(n);
        } else {
            out.push_str(&format!("{}*{}", fmt_q(&a), n));
        }
    }
    out
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.f.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (k, c)) in self.f.terms.iter().enumerate() {
            let mut factors: Vec<String> = Vec::new();
            for (p, n) in k.powers.iter().zip(self.names) {
                match p {
                    0 => {}
                    1 => factors.push(n.clone()),
                    _ => factors.push(format!("{n}^{p}")),
                }
            }
            if k.exp.iter().any(|e| !e.is_zero()) {
                factors.push(format!("exp({})", render_linear(&k.exp, self.names)));
            }
            match &k.trig {
                Trig::One => {}
                Trig::Sin(v) => factors.push(format!("sin({})", render_linear(v, self.names))),
                Trig::Cos(v) => factors.push(format!("cos({})", render_linear(v, self.names))),
            }
            let neg = c.is_negative();
            let a = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if factors.is_empty() {
                write!(f, "{}", fmt_q(&a))?;
            } else if a.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_q(&a), factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &ScalarFn {
    type Output = ScalarFn;
    fn add(self, rhs: &ScalarFn) -> ScalarFn {
        assert_eq!(self.dim, rhs.dim, "adding functions on different charts");
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }
}

impl Sub for &ScalarFn {
    type Output = ScalarFn;
    fn sub(self, rhs: &ScalarFn) -> ScalarFn {
        assert_eq!(self.dim, rhs.dim, "subtracting functions on different charts");
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), -c);
        }
        out
    }
}

impl Neg for &ScalarFn {
    type Output = ScalarFn;
    fn neg(self) -> ScalarFn {
        ScalarFn { dim: self.dim, terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect() }
    }
}

impl Mul for &ScalarFn {
    type Output = ScalarFn;
    fn mul(self, rhs: &ScalarFn) -> ScalarFn {
        assert_eq!(self.dim, rhs.dim, "multiplying functions on different charts");
        let mut out = ScalarFn::zero(self.dim);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &rhs.terms {
                let powers: Vec<u32> = ka.powers.iter().zip(&kb.powers).map(|(a, b)| a + b).collect();
                let exp = add_vec(&ka.exp, &kb.exp);
                let c = ca * cb;
                for (s, trig) in trig_product(&ka.trig, &kb.trig) {
                    out.add_term(Key { powers: powers.clone(), exp: exp.clone(), trig }, &c * s);
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ScalarFn {
            type Output = ScalarFn;
            fn $m(self, rhs: ScalarFn) -> ScalarFn {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&ScalarFn> for ScalarFn {
            type Output = ScalarFn;
            fn $m(self, rhs: &ScalarFn) -> ScalarFn {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ScalarFn {
    type Output = ScalarFn;
    fn neg(self) -> ScalarFn {
        -&self
    }
}

impl std::iter::Sum for ScalarFn {
    fn sum<I: Iterator<Item = ScalarFn>>(mut iter: I) -> ScalarFn {
        let first = iter.next().expect("sum of an empty ScalarFn iterator has no chart");
        iter.fold(first, |a, b| &a + &b)
    }
}

/// Sum with an explicit dimension, for possibly empty iterators.
pub fn sum_fns(dim: usize, iter: impl IntoIterator<Item = ScalarFn>) -> ScalarFn {
    iter.into_iter().fold(ScalarFn::zero(dim), |a, b| &a + &b)
}
