//! Graded sections: forms (on the dual frame) and multivectors (on the frame).

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::symexpr::{ScalarFn, Q};

/// Marker for sections of the exterior algebra of the dual bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Co;

/// Marker for sections of the exterior algebra of the bundle itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Contra;

/// Homogeneous element of an exterior algebra over a frame of rank `rank`
/// with coefficients on a chart of dimension `dim`. Only strictly increasing
/// index tuples are stored.
#[derive(PartialEq, Eq, Hash)]
pub struct Graded<K> {
    rank: usize,
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, ScalarFn>,
    _kind: PhantomData<K>,
}

pub type FormField = Graded<Co>;
pub type Multivector = Graded<Contra>;

/// Sorts `idx` in place and returns the permutation sign, or `None` on a
/// repeated index.
pub fn sort_sign(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl<K> Clone for Graded<K> {
    fn clone(&self) -> Self {
        Self { rank: self.rank, dim: self.dim, degree: self.degree, coeffs: self.coeffs.clone(), _kind: PhantomData }
    }
}

impl<K> fmt::Debug for Graded<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graded").field("rank", &self.rank).field("degree", &self.degree).field("coeffs", &self.coeffs).finish()
    }
}

impl<K> Graded<K> {
    pub fn zero(rank: usize, dim: usize, degree: usize) -> Self {
        Self { rank, dim, degree, coeffs: BTreeMap::new(), _kind: PhantomData }
    }

    pub fn scalar(rank: usize, f: ScalarFn) -> Self {
        let mut g = Self::zero(rank, f.dim(), 0);
        g.add_at(vec![], f);
        g
    }

    /// `f * e_{idx[0]} ^ ... ^ e_{idx[k-1]}` for arbitrary index order.
    pub fn monomial(rank: usize, idx: &[usize], f: ScalarFn) -> Self {
        let mut g = Self::zero(rank, f.dim(), idx.len());
        g.add_at(idx.to_vec(), f);
        g
    }

    /// Degree-1 element from its frame coefficients.
    pub fn from_vector(coeffs: &[ScalarFn], dim: usize) -> Self {
        let mut g = Self::zero(coeffs.len(), dim, 1);
        for (i, c) in coeffs.iter().enumerate() {
            g.add_at(vec![i], c.clone());
        }
        g
    }

    /// Adds `f` on an index tuple in any order (sign applied, repeats vanish).
    pub fn add_at(&mut self, mut idx: Vec<usize>, f: ScalarFn) {
        assert_eq!(idx.len(), self.degree, "index tuple length must equal degree");
        assert!(idx.iter().all(|i| *i < self.rank), "frame index out of range");
        assert_eq!(f.dim(), self.dim, "coefficient on a different chart");
        let Some(sign) = sort_sign(&mut idx) else { return };
        let f = if sign < 0 { -f } else { f };
        if f.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(idx);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(f);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &f;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &ScalarFn)> {
        self.coeffs.iter()
    }

    /// Coefficient on an increasing tuple.
    pub fn coeff(&self, idx: &[usize]) -> ScalarFn {
        self.coeffs.get(idx).cloned().unwrap_or_else(|| ScalarFn::zero(self.dim))
    }

    /// Value on an arbitrary tuple, using antisymmetry.
    pub fn at(&self, idx: &[usize]) -> ScalarFn {
        let mut v = idx.to_vec();
        match sort_sign(&mut v) {
            None => ScalarFn::zero(self.dim),
            Some(s) => {
                let c = self.coeff(&v);
                if s < 0 {
                    -c
                } else {
                    c
                }
            }
        }
    }

    /// Degree-1 coefficients as a vector.
    pub fn as_vector(&self) -> Vec<ScalarFn> {
        assert_eq!(self.degree, 1);
        (0..self.rank).map(|i| self.coeff(&[i])).collect()
    }

    /// Degree-0 value.
    pub fn as_scalar(&self) -> ScalarFn {
        assert_eq!(self.degree, 0);
        self.coeff(&[])
    }

    /// Top-degree coefficient.
    pub fn top_coeff(&self) -> ScalarFn {
        assert_eq!(self.degree, self.rank);
        self.coeff(&(0..self.rank).collect::<Vec<_>>())
    }

    fn same_space(&self, other: &Self) {
        assert_eq!(self.rank, other.rank, "graded elements over different frames");
        assert_eq!(self.dim, other.dim, "graded elements over different charts");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_space(other);
        assert_eq!(self.degree, other.degree, "adding different degrees");
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            out.add_at(k.clone(), v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|f| -f)
    }

    pub fn scale(&self, f: &ScalarFn) -> Self {
        self.map(|c| c * f)
    }

    pub fn scale_q(&self, c: &Q) -> Self {
        self.map(|f| f.scale(c))
    }

    /// Applies `g` to each coefficient (dropping zeros).
    pub fn map(&self, g: impl Fn(&ScalarFn) -> ScalarFn) -> Self {
        let mut out = Self::zero(self.rank, self.dim, self.degree);
        for (k, v) in &self.coeffs {
            out.add_at(k.clone(), g(v));
        }
        out
    }

    /// Fallible coefficient map that may change the chart.
    pub fn try_map_chart(&self, dim: usize, g: impl Fn(&ScalarFn) -> Result<ScalarFn>) -> Result<Self> {
        let mut out = Self::zero(self.rank, dim, self.degree);
        for (k, v) in &self.coeffs {
            out.add_at(k.clone(), g(v)?);
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Self) -> Self {
        self.same_space(other);
        let mut out = Self::zero(self.rank, self.dim, self.degree + other.degree);
        if out.degree > self.rank {
            return out;
        }
        for (a, f) in &self.coeffs {
            for (b, g) in &other.coeffs {
                let mut idx = a.clone();
                idx.extend_from_slice(b);
                out.add_at(idx, f * g);
            }
        }
        out
    }

    /// Renders as `{e1^e2: coeff, ...}` with the given frame and coordinate names.
    pub fn render(&self, frame: &[String], coords: &[String]) -> String {
        if self.coeffs.is_empty() {
            return "0".to_string();
        }
        if self.degree == 0 {
            return self.as_scalar().render(coords);
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(k, v)| {
                let names: Vec<&str> = k.iter().map(|i| frame[*i].as_str()).collect();
                format!("{}: {}", names.join("^"), v.render(coords))
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Contraction of a degree-`p` element into a degree-`k` element of the dual
/// algebra, `k >= p`: the result is `alpha(a_1, ..., a_p, -)`, i.e. the first
/// slots are filled in order, so that `iota_{e1^e2}(e^1^e^2) = 1`.
fn contract<A, B>(p: &Graded<A>, alpha: &Graded<B>) -> Result<Graded<B>> {
    if p.rank != alpha.rank || p.dim != alpha.dim {
        return Err(Error::DimensionMismatch("contraction across different algebroids".into()));
    }
    if p.degree > alpha.degree {
        return Err(Error::DegreeMismatch(format!("cannot contract degree {} into degree {}", p.degree, alpha.degree)));
    }
    let mut out = Graded::<B>::zero(alpha.rank, alpha.dim, alpha.degree - p.degree);
    for (i, f) in &p.coeffs {
        for (j, g) in &alpha.coeffs {
            if !i.iter().all(|x| j.contains(x)) {
                continue;
            }
            let rest: Vec<usize> = j.iter().copied().filter(|x| !i.contains(x)).collect();
            let mut perm = i.clone();
            perm.extend_from_slice(&rest);
            let sign = sort_sign(&mut perm).expect("distinct indices");
            let c = f * g;
            out.add_at(rest, if sign < 0 { -c } else { c });
        }
    }
    Ok(out)
}

/// Interior product of a multivector into a form.
pub fn interior(p: &Multivector, alpha: &FormField) -> Result<FormField> {
    contract(p, alpha)
}

/// Interior product of a form into a multivector.
pub fn interior_form(alpha: &FormField, p: &Multivector) -> Result<Multivector> {
    contract(alpha, p)
}

/// Full pairing of a form and a multivector of equal degree.
pub fn pair(alpha: &FormField, p: &Multivector) -> Result<ScalarFn> {
    if alpha.degree != p.degree {
        return Err(Error::DegreeMismatch("pairing needs equal degrees".into()));
    }
    Ok(interior(p, alpha)?.as_scalar())
}
