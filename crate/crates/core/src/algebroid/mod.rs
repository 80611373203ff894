//! Lie algebroid presentations over a single chart and their graded calculus.

mod calculus;
mod graded;

pub(crate) use calculus::vector_field_bracket;
pub use calculus::{lie_top, VolumeForm};
pub use graded::{interior, interior_form, pair, sort_sign, Co, Contra, FormField, Graded, Multivector};

use crate::error::{Error, Result};
use crate::symexpr::{Chart, ScalarFn, Q};

/// A Lie algebroid given on a global frame `e_1..e_r` over one chart:
/// `anchor[i][j]` is the `j`-th coordinate component of `rho(e_i)` and
/// `structure[i][j][k]` is `C^k_ij` in `[e_i, e_j] = sum_k C^k_ij e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebroidPresentation {
    name: String,
    chart: Chart,
    frame: Vec<String>,
    anchor: Vec<Vec<ScalarFn>>,
    structure: Vec<Vec<Vec<ScalarFn>>>,
}

impl AlgebroidPresentation {
    /// Presentation with the given anchor and all brackets zero.
    pub fn new(name: impl Into<String>, chart: Chart, frame: Vec<String>, anchor: Vec<Vec<ScalarFn>>) -> Result<Self> {
        let n = chart.dim();
        let r = frame.len();
        if anchor.len() != r || anchor.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(format!("anchor must be {r} x {n}")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for f in &frame {
            if !seen.insert(f) {
                return Err(Error::InvalidPresentation(format!("duplicate frame name `{f}`")));
            }
        }
        for row in &anchor {
            for f in row {
                if f.dim() != n {
                    return Err(Error::DimensionMismatch("anchor entry on another chart".into()));
                }
                if !f.is_periodic_valid(&chart) {
                    return Err(Error::PeriodicityViolation(format!(
                        "anchor entry {} is not single-valued on {}",
                        f.display(&chart),
                        chart.name()
                    )));
                }
            }
        }
        let structure = vec![vec![vec![ScalarFn::zero(n); r]; r]; r];
        Ok(Self { name: name.into(), chart, frame, anchor, structure })
    }

    /// Sets `[e_i, e_j] = sum_k coeffs[k] e_k` (and the antisymmetric entry).
    pub fn set_bracket(&mut self, i: usize, j: usize, coeffs: Vec<ScalarFn>) -> Result<()> {
        let r = self.rank();
        if i >= r || j >= r || coeffs.len() != r {
            return Err(Error::DimensionMismatch("bracket indices or length".into()));
        }
        if i == j {
            if coeffs.iter().any(|c| !c.is_zero()) {
                return Err(Error::InvalidPresentation("[e_i, e_i] must vanish".into()));
            }
            return Ok(());
        }
        for c in &coeffs {
            if c.dim() != self.dim() {
                return Err(Error::DimensionMismatch("structure function on another chart".into()));
            }
            if !c.is_periodic_valid(&self.chart) {
                return Err(Error::PeriodicityViolation(format!("structure function {} is not single-valued", c.display(&self.chart))));
            }
        }
        self.structure[j][i] = coeffs.iter().map(|c| -c).collect();
        self.structure[i][j] = coeffs;
        Ok(())
    }

    /// The tangent algebroid of a chart, frame `d_<coord>`.
    pub fn tangent(chart: &Chart) -> Self {
        let n = chart.dim();
        let frame = chart.coords().iter().map(|c| format!("d_{c}")).collect();
        let anchor = (0..n).map(|i| (0..n).map(|j| ScalarFn::int(n, (i == j) as i64)).collect()).collect();
        Self::new(format!("T{}", chart.name()), chart.clone(), frame, anchor).expect("tangent presentation is well formed")
    }

    /// A Lie algebra as an algebroid over a point, from structure constants
    /// `(i, j, [C^k_ij]_k)`.
    pub fn lie_algebra(name: impl Into<String>, frame: Vec<String>, brackets: &[(usize, usize, Vec<Q>)]) -> Result<Self> {
        let point = Chart::point("pt");
        let r = frame.len();
        let mut a = Self::new(name, point, frame, vec![vec![]; r])?;
        for (i, j, c) in brackets {
            a.set_bracket(*i, *j, c.iter().map(|v| ScalarFn::constant(0, v.clone())).collect())?;
        }
        Ok(a)
    }

    /// The rank-zero algebroid over a chart.
    pub fn zero(chart: &Chart) -> Self {
        Self::new(format!("0_{}", chart.name()), chart.clone(), vec![], vec![]).expect("zero presentation is well formed")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn frame(&self) -> &[String] {
        &self.frame
    }

    pub fn frame_index(&self, name: &str) -> Option<usize> {
        self.frame.iter().position(|f| f == name)
    }

    /// `rho(e_i)` as a coordinate vector field.
    pub fn anchor_row(&self, i: usize) -> &[ScalarFn] {
        &self.anchor[i]
    }

    pub fn anchor_matrix(&self) -> &[Vec<ScalarFn>] {
        &self.anchor
    }

    /// `C^k_ij` for all `k`.
    pub fn bracket_coeffs(&self, i: usize, j: usize) -> &[ScalarFn] {
        &self.structure[i][j]
    }

    pub fn structure(&self, i: usize, j: usize, k: usize) -> &ScalarFn {
        &self.structure[i][j][k]
    }

    pub fn is_totally_intransitive(&self) -> bool {
        self.anchor.iter().flatten().all(ScalarFn::is_zero)
    }

    /// Applies a coordinate vector field to a function.
    pub fn apply_vector_field(v: &[ScalarFn], f: &ScalarFn) -> ScalarFn {
        let mut acc = ScalarFn::zero(f.dim());
        for (j, vj) in v.iter().enumerate() {
            if !vj.is_zero() {
                acc = &acc + &(vj * &f.partial(j));
            }
        }
        acc
    }

    /// `rho(e_i) . f`.
    pub fn anchor_apply(&self, i: usize, f: &ScalarFn) -> ScalarFn {
        Self::apply_vector_field(&self.anchor[i], f)
    }

    /// `rho(sum_s u_s e_s)` as a coordinate vector field.
    pub fn section_anchor(&self, u: &[ScalarFn]) -> Vec<ScalarFn> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                let mut acc = ScalarFn::zero(n);
                for (s, us) in u.iter().enumerate() {
                    if !us.is_zero() {
                        acc = &acc + &(us * &self.anchor[s][j]);
                    }
                }
                acc
            })
            .collect()
    }

    /// `rho(u) . f` for a section `u` given by frame coefficients.
    pub fn section_apply(&self, u: &[ScalarFn], f: &ScalarFn) -> ScalarFn {
        Self::apply_vector_field(&self.section_anchor(u), f)
    }

    /// Bracket of two sections given by frame coefficients.
    pub fn bracket_sections(&self, u: &[ScalarFn], v: &[ScalarFn]) -> Vec<ScalarFn> {
        let r = self.rank();
        let n = self.dim();
        let mut out = vec![ScalarFn::zero(n); r];
        for (s, us) in u.iter().enumerate() {
            if us.is_zero() {
                continue;
            }
            for (t, vt) in v.iter().enumerate() {
                if vt.is_zero() || s == t {
                    continue;
                }
                let f = us * vt;
                for (k, o) in out.iter_mut().enumerate() {
                    let c = &self.structure[s][t][k];
                    if !c.is_zero() {
                        *o = &*o + &(&f * c);
                    }
                }
            }
        }
        let rho_u = self.section_anchor(u);
        let rho_v = self.section_anchor(v);
        for k in 0..r {
            let a = Self::apply_vector_field(&rho_u, &v[k]);
            let b = Self::apply_vector_field(&rho_v, &u[k]);
            out[k] = &(&out[k] + &a) - &b;
        }
        out
    }

    /// The frame section `e_i` as coefficients.
    pub fn frame_section(&self, i: usize) -> Vec<ScalarFn> {
        (0..self.rank()).map(|k| ScalarFn::int(self.dim(), (k == i) as i64)).collect()
    }

    pub fn function(&self, f: ScalarFn) -> FormField {
        FormField::scalar(self.rank(), f)
    }

    /// The dual coframe element `e^i`.
    pub fn coframe(&self, i: usize) -> FormField {
        FormField::monomial(self.rank(), &[i], ScalarFn::one(self.dim()))
    }

    pub fn frame_vector(&self, i: usize) -> Multivector {
        Multivector::monomial(self.rank(), &[i], ScalarFn::one(self.dim()))
    }

    pub fn form_from_coeffs(&self, coeffs: &[ScalarFn]) -> FormField {
        FormField::from_vector(coeffs, self.dim())
    }

    /// `s * e_1 ^ ... ^ e_r`.
    pub fn top_multivector(&self, s: ScalarFn) -> Multivector {
        let idx: Vec<usize> = (0..self.rank()).collect();
        Multivector::monomial(self.rank(), &idx, s)
    }

    pub fn render_form(&self, alpha: &FormField) -> String {
        alpha.render(&self.frame, self.chart.coords())
    }

    pub fn render_multivector(&self, p: &Multivector) -> String {
        p.render(&self.frame, self.chart.coords())
    }

    pub fn render_fn(&self, f: &ScalarFn) -> String {
        f.render(self.chart.coords())
    }

    pub(crate) fn check_form(&self, alpha: &FormField) {
        assert_eq!(alpha.rank(), self.rank(), "form from another algebroid");
        assert_eq!(alpha.dim(), self.dim(), "form on another chart");
    }
}
