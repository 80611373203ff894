//! Representations on framed vector bundles, characteristic cocycles and the
//! modular cocycle.

use crate::algebroid::{lie_top, AlgebroidPresentation, FormField, Multivector, VolumeForm};
use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::sampling::Sampler;
use crate::symexpr::{Chart, ScalarFn};

/// Matrix of functions, row-major.
pub type Matrix = Vec<Vec<ScalarFn>>;

/// An `E`-valued form: component `t` is the coefficient of `eps_t`.
pub type EForm = Vec<FormField>;

/// A connection on a framed bundle of rank `m`: `D(e_i) eps_s = sum_t gamma[i][t][s] eps_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    name: String,
    algebroid: AlgebroidPresentation,
    fiber: Vec<String>,
    gamma: Vec<Matrix>,
}

/// A nonvanishing section `coeff * eps` of a framed line bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSection {
    coeff: ScalarFn,
    unit: bool,
}

impl LineSection {
    /// Section whose coefficient is a unit of the function class.
    pub fn unit(coeff: ScalarFn) -> Result<Self> {
        if !coeff.is_unit() {
            return Err(Error::NotAUnit(format!("{coeff:?}")));
        }
        Ok(Self { coeff, unit: true })
    }

    pub fn one(dim: usize) -> Self {
        Self { coeff: ScalarFn::one(dim), unit: true }
    }

    /// Section asserted nonvanishing by the caller; spot-checked at 100
    /// random points.
    pub fn asserted(coeff: ScalarFn, chart: &Chart, seed: u64) -> Result<Self> {
        if coeff.is_unit() {
            return Ok(Self { coeff, unit: true });
        }
        let mut s = Sampler::new(seed);
        for p in s.points(chart.dim(), 100) {
            if coeff.evaluate_q(&p).abs() < 1e-12 {
                return Err(Error::NotAUnit(format!("{} vanishes at a sampled point", coeff.display(chart))));
            }
        }
        Ok(Self { coeff, unit: false })
    }

    pub fn coeff(&self) -> &ScalarFn {
        &self.coeff
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.coeff.unit_inverse().ok_or_else(|| Error::NotAUnit(format!("{:?}", self.coeff)))?;
        Ok(Self { coeff: inv, unit: true })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { coeff: &self.coeff * &other.coeff, unit: self.unit && other.unit }
    }
}

pub(crate) fn mat_mul(a: &Matrix, b: &Matrix, dim: usize) -> Matrix {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = ScalarFn::zero(dim);
                    for l in 0..k {
                        if !a[i][l].is_zero() && !b[l][j].is_zero() {
                            acc = &acc + &(&a[i][l] * &b[l][j]);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

impl Representation {
    pub fn new(name: impl Into<String>, algebroid: AlgebroidPresentation, fiber: Vec<String>, gamma: Vec<Matrix>) -> Result<Self> {
        let m = fiber.len();
        let n = algebroid.dim();
        if gamma.len() != algebroid.rank() {
            return Err(Error::DimensionMismatch(format!("need one matrix per frame element ({}), got {}", algebroid.rank(), gamma.len())));
        }
        for g in &gamma {
            if g.len() != m || g.iter().any(|row| row.len() != m) {
                return Err(Error::DimensionMismatch(format!("connection matrices must be {m} x {m}")));
            }
            for f in g.iter().flatten() {
                if f.dim() != n {
                    return Err(Error::DimensionMismatch("connection entry on another chart".into()));
                }
                if !f.is_periodic_valid(algebroid.chart()) {
                    return Err(Error::PeriodicityViolation(format!(
                        "connection entry {} is not single-valued",
                        f.display(algebroid.chart())
                    )));
                }
            }
        }
        Ok(Self { name: name.into(), algebroid, fiber, gamma })
    }

    pub fn trivial(algebroid: &AlgebroidPresentation, fiber: Vec<String>) -> Self {
        let m = fiber.len();
        let n = algebroid.dim();
        let gamma = vec![vec![vec![ScalarFn::zero(n); m]; m]; algebroid.rank()];
        Self { name: "trivial".into(), algebroid: algebroid.clone(), fiber, gamma }
    }

    /// Line-bundle representation with scalar coefficients `gamma[i]`.
    pub fn line(name: impl Into<String>, algebroid: &AlgebroidPresentation, gamma: Vec<ScalarFn>) -> Result<Self> {
        Self::new(name, algebroid.clone(), vec!["eps".into()], gamma.into_iter().map(|g| vec![vec![g]]).collect())
    }

    /// The adjoint representation of a Lie algebra (over a point).
    pub fn adjoint(g: &AlgebroidPresentation) -> Result<Self> {
        if g.dim() != 0 {
            return Err(Error::PreconditionFailure("adjoint needs an algebroid over a point".into()));
        }
        let r = g.rank();
        let gamma = (0..r).map(|i| (0..r).map(|t| (0..r).map(|s| g.structure(i, s, t).clone()).collect()).collect()).collect();
        Self::new(format!("ad {}", g.name()), g.clone(), g.frame().to_vec(), gamma)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebroid(&self) -> &AlgebroidPresentation {
        &self.algebroid
    }

    pub fn fiber(&self) -> &[String] {
        &self.fiber
    }

    pub fn fiber_rank(&self) -> usize {
        self.fiber.len()
    }

    /// `Gamma_i`.
    pub fn gamma(&self, i: usize) -> &Matrix {
        &self.gamma[i]
    }

    pub fn gammas(&self) -> &[Matrix] {
        &self.gamma
    }

    /// Scalar coefficients of a line-bundle representation.
    pub fn line_coeffs(&self) -> Result<Vec<ScalarFn>> {
        if self.fiber_rank() != 1 {
            return Err(Error::DimensionMismatch("line bundle expected".into()));
        }
        Ok(self.gamma.iter().map(|g| g[0][0].clone()).collect())
    }

    /// Curvature `F_ij = rho_i Gamma_j - rho_j Gamma_i + [Gamma_i, Gamma_j] - sum_k C^k_ij Gamma_k`.
    pub fn curvature(&self, i: usize, j: usize) -> Matrix {
        let a = &self.algebroid;
        let n = a.dim();
        let m = self.fiber_rank();
        let gi_gj = mat_mul(&self.gamma[i], &self.gamma[j], n);
        let gj_gi = mat_mul(&self.gamma[j], &self.gamma[i], n);
        (0..m)
            .map(|t| {
                (0..m)
                    .map(|s| {
                        let mut v = &a.anchor_apply(i, &self.gamma[j][t][s]) - &a.anchor_apply(j, &self.gamma[i][t][s]);
                        v = &(&v + &gi_gj[t][s]) - &gj_gi[t][s];
                        for (k, c) in a.bracket_coeffs(i, j).iter().enumerate() {
                            if !c.is_zero() {
                                v = &v - &(c * &self.gamma[k][t][s]);
                            }
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }

    pub fn check_flat(&self) -> CheckReport {
        let mut rep = CheckReport::new(format!("flatness of {}", self.name));
        let a = &self.algebroid;
        for i in 0..a.rank() {
            for j in i + 1..a.rank() {
                let f = self.curvature(i, j);
                let zero = f.iter().flatten().all(ScalarFn::is_zero);
                rep.residual(format!("F[{}, {}]", a.frame()[i], a.frame()[j]), render_matrix(a, &f), zero);
            }
        }
        rep
    }

    pub fn is_flat(&self) -> bool {
        self.check_flat().passed()
    }

    /// Dual representation: `-Gamma_i^T`.
    pub fn dual(&self) -> Self {
        let m = self.fiber_rank();
        let gamma = self.gamma.iter().map(|g| (0..m).map(|t| (0..m).map(|s| -&g[s][t]).collect()).collect()).collect();
        Self {
            name: format!("{}*", self.name),
            algebroid: self.algebroid.clone(),
            fiber: self.fiber.iter().map(|f| format!("{f}*")).collect(),
            gamma,
        }
    }

    /// Tensor product on the frame `eps_s (x) eps'_s'`, indexed `s * m' + s'`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.algebroid != other.algebroid {
            return Err(Error::DimensionMismatch("tensor of representations of different algebroids".into()));
        }
        let (m1, m2) = (self.fiber_rank(), other.fiber_rank());
        let n = self.algebroid.dim();
        let mut fiber = Vec::with_capacity(m1 * m2);
        for a in &self.fiber {
            for b in &other.fiber {
                fiber.push(format!("{a}*{b}"));
            }
        }
        let gamma = (0..self.algebroid.rank())
            .map(|i| {
                let mut g = vec![vec![ScalarFn::zero(n); m1 * m2]; m1 * m2];
                for t in 0..m1 {
                    for s in 0..m1 {
                        for u in 0..m2 {
                            let v = &self.gamma[i][t][s];
                            if !v.is_zero() {
                                g[t * m2 + u][s * m2 + u] = &g[t * m2 + u][s * m2 + u] + v;
                            }
                        }
                    }
                }
                for t in 0..m2 {
                    for s in 0..m2 {
                        for u in 0..m1 {
                            let v = &other.gamma[i][t][s];
                            if !v.is_zero() {
                                g[u * m2 + t][u * m2 + s] = &g[u * m2 + t][u * m2 + s] + v;
                            }
                        }
                    }
                }
                g
            })
            .collect();
        Ok(Self { name: format!("{} (x) {}", self.name, other.name), algebroid: self.algebroid.clone(), fiber, gamma })
    }

    /// `d_{A,E}`: componentwise `d_A` plus `(-1)^k sum Gamma_i a ^ e^i`.
    pub fn d_ae(&self, s: &EForm) -> Result<EForm> {
        let flat = self.check_flat();
        if !flat.passed() {
            return Err(Error::NotFlat(flat.to_string()));
        }
        Ok(self.d_ae_unchecked(s))
    }

    pub(crate) fn d_ae_unchecked(&self, s: &EForm) -> EForm {
        let a = &self.algebroid;
        let m = self.fiber_rank();
        assert_eq!(s.len(), m, "E-valued form has wrong number of components");
        let k = s.first().map_or(0, FormField::degree);
        (0..m)
            .map(|t| {
                let mut out = a.d(&s[t]);
                for i in 0..a.rank() {
                    let ei = a.coframe(i);
                    for (sidx, comp) in s.iter().enumerate() {
                        let g = &self.gamma[i][t][sidx];
                        if g.is_zero() || comp.is_zero() {
                            continue;
                        }
                        let term = comp.wedge(&ei).scale(g);
                        out = if k.is_multiple_of(2) { out.add(&term) } else { out.sub(&term) };
                    }
                }
                out
            })
            .collect()
    }

    /// Characteristic cocycle `a_i = gamma_i + rho_i(s)/s` of a line
    /// representation with respect to the section `s * eps`.
    pub fn char_cocycle(&self, lambda: &LineSection) -> Result<FormField> {
        let gammas = self.line_coeffs()?;
        let a = &self.algebroid;
        let s = lambda.coeff();
        let inv = s.unit_inverse().ok_or_else(|| Error::NotAUnit(format!("section coefficient {} is not a unit", s.display(a.chart()))))?;
        let coeffs: Vec<ScalarFn> = gammas.iter().enumerate().map(|(i, g)| g + &(&a.anchor_apply(i, s) * &inv)).collect();
        let alpha = a.form_from_coeffs(&coeffs);
        let dalpha = a.d(&alpha);
        if !dalpha.is_zero() {
            return Err(Error::NotClosed(a.render_form(&dalpha)));
        }
        Ok(alpha)
    }
}

pub(crate) fn render_matrix(a: &AlgebroidPresentation, m: &Matrix) -> String {
    let rows: Vec<String> =
        m.iter().map(|row| format!("[{}]", row.iter().map(|f| a.render_fn(f)).collect::<Vec<_>>().join(", "))).collect();
    format!("[{}]", rows.join(", "))
}

/// Top-degree part of `[e_i, omega]` relative to `omega` plus
/// `L_{rho(e_i)} mu` relative to `mu`; both section coefficients must be units.
pub fn modular_cocycle(a: &AlgebroidPresentation, omega: &Multivector, mu: &VolumeForm) -> Result<FormField> {
    if omega.degree() != a.rank() || omega.rank() != a.rank() {
        return Err(Error::DegreeMismatch("omega must be a top multivector".into()));
    }
    let s = omega.top_coeff();
    let s_inv = s.unit_inverse().ok_or_else(|| Error::NotAUnit(format!("top section coefficient {}", a.render_fn(&s))))?;
    let g_inv = mu.coeff.unit_inverse().ok_or_else(|| Error::NotAUnit(format!("volume coefficient {}", a.render_fn(&mu.coeff))))?;
    let mut coeffs = Vec::with_capacity(a.rank());
    for i in 0..a.rank() {
        let br = a.schouten(&a.frame_vector(i), omega)?;
        let first = &br.top_coeff() * &s_inv;
        let second = &lie_top(a.anchor_row(i), mu).coeff * &g_inv;
        coeffs.push(&first + &second);
    }
    let alpha = a.form_from_coeffs(&coeffs);
    let dalpha = a.d(&alpha);
    if !dalpha.is_zero() {
        return Err(Error::NotClosed(a.render_form(&dalpha)));
    }
    Ok(alpha)
}

/// Trivializing sections `top * e_1^..^e_r` and `volume * dx_1^..^dx_n`
/// used for modular cocycles.
#[derive(Debug, Clone, PartialEq)]
pub struct Sections {
    pub top: ScalarFn,
    pub volume: ScalarFn,
}

impl Sections {
    pub fn standard(dim: usize) -> Self {
        Self { top: ScalarFn::one(dim), volume: ScalarFn::one(dim) }
    }

    pub fn new(top: ScalarFn, volume: ScalarFn) -> Self {
        Self { top, volume }
    }

    pub fn modular(&self, a: &AlgebroidPresentation) -> Result<FormField> {
        modular_cocycle(a, &a.top_multivector(self.top.clone()), &VolumeForm::new(self.volume.clone()))
    }

    /// The section `omega (x) mu` of the canonical line bundle in its standard frame.
    pub fn line_section(&self) -> Result<LineSection> {
        LineSection::unit(&self.top * &self.volume)
    }
}

/// The canonical representation on `top A (x) top T*M`, framed by
/// `e_1^..^e_r (x) dx_1^..^dx_n`.
pub fn canonical_rep(a: &AlgebroidPresentation) -> Result<Representation> {
    let gamma = modular_cocycle(a, &a.top_multivector(ScalarFn::one(a.dim())), &VolumeForm::standard(a.dim()))?;
    Representation::line(format!("D^{}", a.name()), a, gamma.as_vector())
}
