//! Degree-one cohomology questions decided in finite ansatz spaces.
//!
//! A cocycle is either exact (a primitive is exhibited), certified non-exact
//! (a periodic direction along which it has nonzero mean), or undecided in
//! the chosen ansatz.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::algebroid::{AlgebroidPresentation, FormField};
use crate::error::{Error, Result};
use crate::linalg::{Solution, SparseRow, SparseSystem};
use crate::morphism::Morphism;
use crate::pullback::{FrameMode, Pullback};
use crate::report::CheckReport;
use crate::sampling::Sampler;
use crate::symexpr::{fmt_q, Chart, Key, ScalarFn, Trig, Q};

/// Polynomials of bounded total degree in the non-periodic coordinates, times
/// Fourier modes of bounded frequency in the periodic ones, plus any extra
/// exponential/trigonometric atoms (with their sin/cos partners).
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzSpace {
    chart: Chart,
    degree: u32,
    modes: u32,
    extra: BTreeSet<(Vec<Q>, Trig)>,
}

fn partner(t: &Trig) -> Trig {
    match t {
        Trig::One => Trig::One,
        Trig::Sin(c) => Trig::Cos(c.clone()),
        Trig::Cos(c) => Trig::Sin(c.clone()),
    }
}

impl AnsatzSpace {
    pub fn new(chart: &Chart, degree: u32, modes: u32) -> Self {
        Self { chart: chart.clone(), degree, modes, extra: BTreeSet::new() }
    }

    /// Adds the exponential/trigonometric atoms occurring in `f`.
    pub fn with_atoms_of(mut self, f: &ScalarFn) -> Self {
        for (k, _) in f.terms() {
            self.extra.insert((k.exp.clone(), k.trig.clone()));
            self.extra.insert((k.exp.clone(), partner(&k.trig)));
        }
        self
    }

    /// Adds the atoms of every coefficient of `alpha`.
    pub fn with_form_atoms(self, alpha: &FormField) -> Self {
        alpha.terms().fold(self, |s, (_, f)| s.with_atoms_of(f))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn modes(&self) -> u32 {
        self.modes
    }

    fn phases(&self) -> BTreeSet<(Vec<Q>, Trig)> {
        let n = self.chart.dim();
        let periodic: Vec<usize> = (0..n).filter(|k| self.chart.is_periodic(*k)).collect();
        let zero = vec![Q::zero(); n];
        let mut out = BTreeSet::new();
        out.insert((zero.clone(), Trig::One));
        let m = self.modes as i64;
        let width = (2 * m + 1) as usize;
        let total = width.pow(periodic.len() as u32);
        for code in 0..total {
            let mut c = zero.clone();
            let mut r = code;
            for k in &periodic {
                c[*k] = Q::from_integer(((r % width) as i64 - m).into());
                r /= width;
            }
            // keep lexicographically positive frequency vectors
            match c.iter().find(|v| !v.is_zero()) {
                Some(v) if v.is_positive() => {
                    out.insert((zero.clone(), Trig::Sin(c.clone())));
                    out.insert((zero.clone(), Trig::Cos(c)));
                }
                _ => {}
            }
        }
        out.extend(self.extra.iter().cloned());
        out
    }

    fn monomials(&self) -> Vec<Vec<u32>> {
        let n = self.chart.dim();
        let free: Vec<usize> = (0..n).filter(|k| !self.chart.is_periodic(*k)).collect();
        let mut out = vec![vec![0u32; n]];
        for k in free {
            let mut next = Vec::new();
            for p in &out {
                let used: u32 = p.iter().sum();
                for e in 0..=self.degree - used {
                    let mut q = p.clone();
                    q[k] = e;
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    /// Basis functions of the space.
    pub fn basis(&self) -> Vec<ScalarFn> {
        let n = self.chart.dim();
        let mut out = Vec::new();
        for (exp, trig) in self.phases() {
            for powers in self.monomials() {
                let key = Key { powers, exp: exp.clone(), trig: trig.clone() };
                out.push(ScalarFn::from_terms(n, [(key, Q::one())]));
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.phases().len() * self.monomials().len()
    }
}

impl fmt::Display for AnsatzSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "polynomial degree {}, Fourier modes {}, {} extra atoms, dimension {}",
            self.degree,
            self.modes,
            self.extra.len(),
            self.dim()
        )
    }
}

pub fn is_cocycle(a: &AlgebroidPresentation, alpha: &FormField) -> bool {
    a.d(alpha).is_zero()
}

fn require_cocycle(a: &AlgebroidPresentation, alpha: &FormField) -> Result<()> {
    if alpha.degree() != 1 {
        return Err(Error::DegreeMismatch("a 1-form is required".into()));
    }
    let d = a.d(alpha);
    if !d.is_zero() {
        return Err(Error::NotClosed(a.render_form(&d)));
    }
    Ok(())
}

/// Outcome of [`solve_exact`].
#[derive(Debug, Clone, PartialEq)]
pub enum ExactSolve {
    Primitive(ScalarFn),
    /// Equations (indexed by frame element and basis key) whose combination
    /// reads `0 = nonzero`; `unknowns` is the ansatz dimension.
    NoSolutionInAnsatz {
        witness_equations: usize,
        unknowns: usize,
    },
}

/// Solves `d_A f = alpha` for `f` in the ansatz, exactly over the rationals.
pub fn solve_exact(a: &AlgebroidPresentation, alpha: &FormField, space: &AnsatzSpace) -> Result<ExactSolve> {
    require_cocycle(a, alpha)?;
    if space.chart() != a.chart() {
        return Err(Error::PreconditionFailure("ansatz lives on another chart".into()));
    }
    let basis = space.basis();
    let mut row_of: BTreeMap<(usize, Key), usize> = BTreeMap::new();
    let mut rows: Vec<SparseRow> = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();
    let mut row = |i: usize, k: &Key, rows: &mut Vec<SparseRow>, rhs: &mut Vec<Q>| -> usize {
        *row_of.entry((i, k.clone())).or_insert_with(|| {
            rows.push(SparseRow::new());
            rhs.push(Q::zero());
            rows.len() - 1
        })
    };
    for i in 0..a.rank() {
        for (col, b) in basis.iter().enumerate() {
            for (k, c) in a.anchor_apply(i, b).terms() {
                let r = row(i, k, &mut rows, &mut rhs);
                rows[r].insert(col, c.clone());
            }
        }
        for (k, c) in alpha.coeff(&[i]).terms() {
            let r = row(i, k, &mut rows, &mut rhs);
            rhs[r] = c.clone();
        }
    }
    let mut sys = SparseSystem::new(basis.len());
    for (r, b) in rows.into_iter().zip(rhs) {
        sys.push(r, b);
    }
    Ok(match sys.solve() {
        Solution::Unique(x) => {
            let f = x.iter().zip(&basis).filter(|(c, _)| !c.is_zero()).fold(ScalarFn::zero(a.dim()), |acc, (c, b)| &acc + &b.scale(c));
            debug_assert!(a.d(&a.function(f.clone())) == *alpha);
            ExactSolve::Primitive(f)
        }
        Solution::Inconsistent { witness } => ExactSolve::NoSolutionInAnsatz { witness_equations: witness.len(), unknowns: basis.len() },
    })
}

/// Sound obstruction to exactness: along a constant frame combination `a`
/// with anchor `d/d theta`, any global primitive has zero mean in `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodCertificate {
    /// Algebroid on which the mean was computed (the probe's source when a
    /// probe morphism was used).
    pub algebroid: String,
    pub coord: String,
    pub direction: Vec<Q>,
    pub mean: ScalarFn,
    pub mean_text: String,
    pub sample_point: Vec<Q>,
    pub sample_value: f64,
    pub probe: Option<String>,
}

impl fmt::Display for PeriodCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir: Vec<String> = self.direction.iter().map(fmt_q).collect();
        write!(f, "mean of <alpha, a> over {} is {} (a = [{}] on {})", self.coord, self.mean_text, dir.join(", "), self.algebroid)?;
        if let Some(p) = &self.probe {
            write!(f, ", via probe {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PeriodOutcome {
    Certified(PeriodCertificate),
    Inconclusive { mean: ScalarFn },
}

/// Constant frame combination whose anchor is exactly `d/d x_coord`, if any.
pub fn find_period_direction(a: &AlgebroidPresentation, coord: usize) -> Option<Vec<Q>> {
    let mut row_of: BTreeMap<(usize, Key), usize> = BTreeMap::new();
    let mut sys = SparseSystem::new(a.rank());
    let mut rows: Vec<SparseRow> = Vec::new();
    for i in 0..a.rank() {
        for (j, f) in a.anchor_row(i).iter().enumerate() {
            for (k, c) in f.terms() {
                let r = *row_of.entry((j, k.clone())).or_insert_with(|| {
                    rows.push(SparseRow::new());
                    rows.len() - 1
                });
                rows[r].insert(i, c.clone());
            }
        }
    }
    let one_key = ScalarFn::one(a.dim()).terms().next().map(|(k, _)| k.clone())?;
    let target = (coord, one_key);
    let mut rhs = vec![Q::zero(); rows.len()];
    rhs[*row_of.get(&target)?] = Q::one();
    for (r, b) in rows.into_iter().zip(rhs) {
        sys.push(r, b);
    }
    match sys.solve() {
        Solution::Unique(x) => Some(x),
        Solution::Inconsistent { .. } => None,
    }
}

/// Period test along `direction` (constant frame coefficients) whose anchor
/// must be exactly `d/d x_coord` with `x_coord` periodic.
pub fn period_certificate(a: &AlgebroidPresentation, alpha: &FormField, direction: &[Q], coord: usize, seed: u64) -> Result<PeriodOutcome> {
    require_cocycle(a, alpha)?;
    let n = a.dim();
    if coord >= n || !a.chart().is_periodic(coord) {
        return Err(Error::PreconditionFailure("period direction must be a periodic coordinate".into()));
    }
    if direction.len() != a.rank() {
        return Err(Error::DimensionMismatch("direction has the wrong length".into()));
    }
    let coeffs: Vec<ScalarFn> = direction.iter().map(|c| ScalarFn::constant(n, c.clone())).collect();
    let anchor = a.section_anchor(&coeffs);
    for (j, f) in anchor.iter().enumerate() {
        if *f != ScalarFn::int(n, (j == coord) as i64) {
            return Err(Error::PreconditionFailure(format!("anchor of the direction is not d/d{}", a.chart().coord(coord))));
        }
    }
    let pairing = (0..a.rank()).fold(ScalarFn::zero(n), |acc, i| &acc + &alpha.coeff(&[i]).scale(&direction[i]));
    if !pairing.is_periodic_valid(a.chart()) {
        return Err(Error::PreconditionFailure("cocycle is not a global function on the periodic chart".into()));
    }
    let mean = ScalarFn::from_terms(
        n,
        pairing
            .terms()
            .filter(|(k, _)| match &k.trig {
                Trig::One => true,
                Trig::Sin(c) | Trig::Cos(c) => c[coord].is_zero(),
            })
            .map(|(k, c)| (k.clone(), c.clone())),
    );
    if mean.is_zero() {
        return Ok(PeriodOutcome::Inconclusive { mean });
    }
    let mut sampler = Sampler::new(seed);
    let (sample_point, sample_value) = (0..100)
        .map(|_| {
            let p = sampler.point(n);
            let v = mean.evaluate_q(&p);
            (p, v)
        })
        .find(|(_, v)| v.abs() > 1e-12)
        .unwrap_or_else(|| (vec![Q::zero(); n], mean.evaluate_q(&vec![Q::zero(); n])));
    Ok(PeriodOutcome::Certified(PeriodCertificate {
        algebroid: a.name().to_string(),
        coord: a.chart().coord(coord).to_string(),
        direction: direction.to_vec(),
        mean_text: a.render_fn(&mean),
        mean,
        sample_point,
        sample_value,
        probe: None,
    }))
}

/// Tries every periodic coordinate with an automatically found direction.
pub fn auto_certificate(a: &AlgebroidPresentation, alpha: &FormField, seed: u64) -> Result<Option<PeriodCertificate>> {
    require_cocycle(a, alpha)?;
    for coord in (0..a.dim()).filter(|k| a.chart().is_periodic(*k)) {
        if let Some(dir) = find_period_direction(a, coord) {
            if let PeriodOutcome::Certified(c) = period_certificate(a, alpha, &dir, coord, seed)? {
                return Ok(Some(c));
            }
        }
    }
    Ok(None)
}

/// Certifies non-exactness of `alpha` through a verified morphism into its
/// algebroid: pull-backs of exact cocycles are exact.
pub fn probe_certificate(probe: &Morphism, alpha: &FormField, seed: u64) -> Result<Option<PeriodCertificate>> {
    let check = probe.check();
    if !check.passed() {
        return Err(Error::NotAMorphism(format!("probe {} fails verification", probe.name())));
    }
    let pulled = probe.pullback_form(alpha)?;
    Ok(auto_certificate(probe.source(), &pulled, seed)?.map(|mut c| {
        c.probe = Some(probe.name().to_string());
        c
    }))
}

/// Three-valued exactness verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Exact(ScalarFn),
    CertifiedNonexact(PeriodCertificate),
    UnknownInAnsatz,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Exact(_) => "exact",
            Verdict::CertifiedNonexact(_) => "certified-nonexact",
            Verdict::UnknownInAnsatz => "unknown-in-ansatz",
        }
    }
}

/// A cocycle with the ansatz in which its class was examined.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleClass {
    pub representative: FormField,
    pub ansatz: AnsatzSpace,
    pub status: Verdict,
}

impl CocycleClass {
    pub fn classify(a: &AlgebroidPresentation, alpha: &FormField, space: &AnsatzSpace, probes: &[Morphism], seed: u64) -> Result<Self> {
        let space = space.clone().with_form_atoms(alpha);
        let status = classify_verdict(a, alpha, &space, probes, seed)?;
        Ok(Self { representative: alpha.clone(), ansatz: space, status })
    }

    /// Re-examines the class in a new ansatz; decided verdicts are kept.
    pub fn refine(&mut self, a: &AlgebroidPresentation, space: &AnsatzSpace, probes: &[Morphism], seed: u64) -> Result<()> {
        if matches!(self.status, Verdict::UnknownInAnsatz) {
            let space = space.clone().with_form_atoms(&self.representative);
            self.status = classify_verdict(a, &self.representative, &space, probes, seed)?;
            self.ansatz = space;
        }
        Ok(())
    }
}

fn classify_verdict(a: &AlgebroidPresentation, alpha: &FormField, space: &AnsatzSpace, probes: &[Morphism], seed: u64) -> Result<Verdict> {
    if let Some(c) = auto_certificate(a, alpha, seed)? {
        return Ok(Verdict::CertifiedNonexact(c));
    }
    for p in probes.iter().filter(|p| p.target() == a) {
        if let Some(c) = probe_certificate(p, alpha, seed)? {
            return Ok(Verdict::CertifiedNonexact(c));
        }
    }
    Ok(match solve_exact(a, alpha, space)? {
        ExactSolve::Primitive(f) => Verdict::Exact(f),
        ExactSolve::NoSolutionInAnsatz { .. } => Verdict::UnknownInAnsatz,
    })
}

/// Verdict on `alpha - beta`: `Exact` means cohomologous.
pub fn cohomologous(
    a: &AlgebroidPresentation,
    alpha: &FormField,
    beta: &FormField,
    space: &AnsatzSpace,
    probes: &[Morphism],
    seed: u64,
) -> Result<Verdict> {
    let diff = alpha.sub(beta);
    let space = space.clone().with_form_atoms(&diff);
    classify_verdict(a, &diff, &space, probes, seed)
}

/// Injectivity mechanism for a product-submersion pull-back: an exact
/// pull-back has a basic primitive descending to a primitive on the base, and
/// a certified base class stays certified upstairs.
pub fn check_pullback_injectivity(
    pb: &Pullback,
    alpha: &FormField,
    s_target: &AnsatzSpace,
    s_source: &AnsatzSpace,
    seed: u64,
) -> Result<CheckReport> {
    let FrameMode::ProductSubmersion { base_coords } = &pb.frame.mode else {
        return Err(Error::PreconditionFailure("product-submersion pull-back required".into()));
    };
    let b = pb.projection.target();
    let up = &pb.algebroid;
    require_cocycle(b, alpha)?;
    let pulled = pb.projection.pullback_form(alpha)?;
    let mut rep = CheckReport::new(format!("injectivity on H^1 along {}", pb.projection.name()));
    let base = CocycleClass::classify(b, alpha, s_target, &[], seed)?;
    let top = CocycleClass::classify(up, &pulled, s_source, &[], seed)?;
    rep.note(format!("base verdict: {}", base.status.label()));
    rep.note(format!("pull-back verdict: {}", top.status.label()));
    match (&base.status, &top.status) {
        (_, Verdict::Exact(f)) => {
            let dim_m = up.dim();
            let fiber: Vec<usize> = (0..dim_m).filter(|k| !base_coords.contains(k)).collect();
            for k in &fiber {
                let df = f.partial(*k);
                rep.residual(format!("d{} f", up.chart().coord(*k)), up.render_fn(&df), df.is_zero());
            }
            // restrict to the zero section of the fiber
            let n = b.dim();
            let mut section = vec![ScalarFn::zero(n); dim_m];
            for (j, k) in base_coords.iter().enumerate() {
                section[*k] = ScalarFn::var(n, j);
            }
            let g = f.substitute_in(&section, n)?;
            rep.note(format!("primitive on the base: {}", b.render_fn(&g)));
            let diff = b.d(&b.function(g)).sub(alpha);
            rep.residual("d_B g - alpha", b.render_form(&diff), diff.is_zero());
        }
        (Verdict::CertifiedNonexact(_), Verdict::CertifiedNonexact(_)) => {
            rep.residual("both levels certified non-exact", "0", true);
        }
        (Verdict::Exact(_), _) => rep.fail("base class exact but pull-back not solved in the ansatz"),
        (Verdict::CertifiedNonexact(_), Verdict::UnknownInAnsatz) => rep.fail("base class certified non-exact but pull-back undecided"),
        (Verdict::UnknownInAnsatz, _) => rep.fail("base class undecided in the ansatz"),
    }
    Ok(rep)
}
