//! Differential, Schouten bracket, Lie derivative of volume forms and the
//! axiom check.

use super::{AlgebroidPresentation, FormField, Multivector};
use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::symexpr::ScalarFn;

/// A top-degree form `coeff * dx_1 ^ ... ^ dx_n` on a chart, in chart order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeForm {
    pub coeff: ScalarFn,
}

impl VolumeForm {
    pub fn new(coeff: ScalarFn) -> Self {
        Self { coeff }
    }

    pub fn standard(dim: usize) -> Self {
        Self { coeff: ScalarFn::one(dim) }
    }

    /// Reads the coefficient of a top form on the tangent presentation.
    pub fn from_form(mu: &FormField) -> Result<Self> {
        if mu.degree() != mu.rank() || mu.rank() != mu.dim() {
            return Err(Error::DegreeMismatch("volume form must be top degree on TM".into()));
        }
        Ok(Self { coeff: mu.top_coeff() })
    }

    pub fn to_form(&self) -> FormField {
        let n = self.coeff.dim();
        let idx: Vec<usize> = (0..n).collect();
        FormField::monomial(n, &idx, self.coeff.clone())
    }
}

/// Lie derivative of a volume form along a coordinate vector field.
pub fn lie_top(v: &[ScalarFn], mu: &VolumeForm) -> VolumeForm {
    let n = mu.coeff.dim();
    assert_eq!(v.len(), n, "vector field dimension");
    let mut acc = ScalarFn::zero(n);
    for (j, vj) in v.iter().enumerate() {
        acc = &acc + &(&mu.coeff * vj).partial(j);
    }
    VolumeForm { coeff: acc }
}

fn drop_index(idx: &[usize], a: usize) -> Vec<usize> {
    idx.iter().enumerate().filter(|(p, _)| *p != a).map(|(_, v)| *v).collect()
}

fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub(crate) fn vector_field_bracket(v: &[ScalarFn], w: &[ScalarFn]) -> Vec<ScalarFn> {
    (0..v.len())
        .map(|l| &AlgebroidPresentation::apply_vector_field(v, &w[l]) - &AlgebroidPresentation::apply_vector_field(w, &v[l]))
        .collect()
}

impl AlgebroidPresentation {
    /// The algebroid differential, evaluated on increasing frame tuples:
    ///
    /// ```text
    /// (d a)(e_0..e_k) = sum_a (-1)^a rho(e_a) a(..^a..)
    ///                 + sum_{a<b} (-1)^{a+b} a([e_a, e_b], ..^a..^b..)
    /// ```
    pub fn d(&self, alpha: &FormField) -> FormField {
        self.check_form(alpha);
        let r = self.rank();
        let k = alpha.degree();
        let mut out = FormField::zero(r, self.dim(), k + 1);
        if k + 1 > r {
            return out;
        }
        for idx in increasing_tuples(r, k + 1) {
            let mut acc = ScalarFn::zero(self.dim());
            for a in 0..=k {
                let rest = drop_index(&idx, a);
                let term = self.anchor_apply(idx[a], &alpha.at(&rest));
                acc = if a % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            for a in 0..=k {
                for b in a + 1..=k {
                    let rest = drop_index(&drop_index(&idx, b), a);
                    let mut inner = ScalarFn::zero(self.dim());
                    for (m, c) in self.bracket_coeffs(idx[a], idx[b]).iter().enumerate() {
                        if c.is_zero() {
                            continue;
                        }
                        let mut t = vec![m];
                        t.extend_from_slice(&rest);
                        inner = &inner + &(c * &alpha.at(&t));
                    }
                    acc = if (a + b) % 2 == 0 { &acc + &inner } else { &acc - &inner };
                }
            }
            out.add_at(idx, acc);
        }
        out
    }

    fn decompose(&self, p: &Multivector) -> Vec<Vec<Vec<ScalarFn>>> {
        let n = self.dim();
        p.terms()
            .map(|(idx, f)| {
                idx.iter()
                    .enumerate()
                    .map(|(pos, i)| {
                        let mut v = vec![ScalarFn::zero(n); self.rank()];
                        v[*i] = if pos == 0 { f.clone() } else { ScalarFn::one(n) };
                        v
                    })
                    .collect()
            })
            .collect()
    }

    fn wedge_vectors(&self, vs: &[&Vec<ScalarFn>], scalar: ScalarFn) -> Multivector {
        let mut acc = Multivector::scalar(self.rank(), scalar);
        for v in vs {
            acc = acc.wedge(&Multivector::from_vector(v, self.dim()));
        }
        acc
    }

    /// Schouten-Gerstenhaber bracket. For a vector `P` this is the Lie
    /// derivative of `Q` along `P`.
    pub fn schouten(&self, p: &Multivector, q: &Multivector) -> Result<Multivector> {
        let (dp, dq) = (p.degree(), q.degree());
        if dp == 0 && dq == 0 {
            return Err(Error::DegreeMismatch("bracket of two functions has degree -1".into()));
        }
        let n = self.dim();
        let r = self.rank();
        if dp == 0 {
            let flipped = self.schouten(q, p)?;
            return Ok(if dq % 2 == 0 { flipped } else { flipped.neg() });
        }
        let mut out = Multivector::zero(r, n, dp + dq - 1);
        if dq == 0 {
            let g = q.as_scalar();
            for xs in self.decompose(p) {
                for a in 0..dp {
                    let xa_g = self.section_apply(&xs[a], &g);
                    if xa_g.is_zero() {
                        continue;
                    }
                    let rest: Vec<&Vec<ScalarFn>> = xs.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, v)| v).collect();
                    let term = self.wedge_vectors(&rest, xa_g);
                    // (-1)^{p-a} with 1-based a
                    out = if (dp - (a + 1)) % 2 == 0 { out.add(&term) } else { out.sub(&term) };
                }
            }
            return Ok(out);
        }
        let xs_all = self.decompose(p);
        let ys_all = self.decompose(q);
        for xs in &xs_all {
            for ys in &ys_all {
                for a in 0..dp {
                    for b in 0..dq {
                        let br = self.bracket_sections(&xs[a], &ys[b]);
                        if br.iter().all(ScalarFn::is_zero) {
                            continue;
                        }
                        let mut vs: Vec<&Vec<ScalarFn>> = vec![&br];
                        vs.extend(xs.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, v)| v));
                        vs.extend(ys.iter().enumerate().filter(|(i, _)| *i != b).map(|(_, v)| v));
                        let term = self.wedge_vectors(&vs, ScalarFn::one(n));
                        out = if (a + b) % 2 == 0 { out.add(&term) } else { out.sub(&term) };
                    }
                }
            }
        }
        Ok(out)
    }

    /// Checks `d o d = 0` on coordinates and coframe, and that the anchor
    /// maps frame brackets to vector-field brackets.
    pub fn check_axioms(&self) -> CheckReport {
        let mut rep = CheckReport::new(format!("axioms of {}", self.name()));
        let n = self.dim();
        for j in 0..n {
            let f = self.function(ScalarFn::var(n, j));
            let dd = self.d(&self.d(&f));
            rep.residual(format!("dd {}", self.chart().coord(j)), self.render_form(&dd), dd.is_zero());
        }
        for k in 0..self.rank() {
            let dd = self.d(&self.d(&self.coframe(k)));
            rep.residual(format!("dd e^{}", self.frame()[k]), self.render_form(&dd), dd.is_zero());
        }
        for i in 0..self.rank() {
            for j in i + 1..self.rank() {
                let lhs = self.section_anchor(self.bracket_coeffs(i, j));
                let rhs = vector_field_bracket(self.anchor_row(i), self.anchor_row(j));
                let diff: Vec<ScalarFn> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
                let zero = diff.iter().all(ScalarFn::is_zero);
                let shown: Vec<String> = diff.iter().map(|f| self.render_fn(f)).collect();
                rep.residual(format!("anchor [{}, {}]", self.frame()[i], self.frame()[j]), format!("({})", shown.join(", ")), zero);
            }
        }
        rep
    }
}
