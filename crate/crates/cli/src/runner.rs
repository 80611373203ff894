//! Executes scenario assertions against the materialized environment.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use modclass_core::category::{coboundary_from_terminal, delta0, delta1, mod_cochain, verify_mod_coboundary, Cochain0};
use modclass_core::cohomology::{cohomologous, AnsatzSpace, CocycleClass, Verdict as ClassVerdict};
use modclass_core::extension::{cotangent_algebroid, induced_rep, top_rep, verify_regular_poisson, verify_thm45, verify_thm47};
use modclass_core::morphism::{check_composition_law, check_rep_morphism};
use modclass_core::pullback::{check_admissible, check_transverse, factorize, isomorphism_by_names, verify_ell_phi, verify_normal_form};
use modclass_core::report::CheckReport;
use modclass_core::sampling::Sampler;
use modclass_core::{lie_top, AlgebroidPresentation, LineSection, Morphism, ScalarFn, VolumeForm};

use crate::env::{Env, Unavailable};
use crate::report::{AssertionReport, DeclFailure, Report, Summary, Verdict};
use crate::scenario::{Assertion, Check, DiagramCheck, Expect, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub ansatz_degree: u32,
    pub fourier_modes: u32,
    pub timings: bool,
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: 0, ansatz_degree: 4, fourier_modes: 4, timings: false, threads: 1 }
    }
}

/// What a check found, before it is compared with the expectation.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Found {
    Holds,
    Fails,
    Undecided,
    Error { kind: String, message: String },
}

impl Found {
    fn describe(&self) -> String {
        match self {
            Found::Holds => "holds".into(),
            Found::Fails => "fails".into(),
            Found::Undecided => "undecided".into(),
            Found::Error { kind, .. } => format!("error {kind}"),
        }
    }
}

impl From<&CheckReport> for Found {
    fn from(r: &CheckReport) -> Self {
        if r.passed() {
            Found::Holds
        } else {
            Found::Fails
        }
    }
}

struct Failure(Found);

impl From<Unavailable> for Failure {
    fn from(u: Unavailable) -> Self {
        Failure(Found::Error { kind: "Unavailable".into(), message: u.0 })
    }
}

impl From<modclass_core::Error> for Failure {
    fn from(e: modclass_core::Error) -> Self {
        let debug = format!("{e:?}");
        let kind = debug.split(['(', ' ', '{']).next().unwrap_or("Error").to_string();
        Failure(Found::Error { kind, message: e.to_string() })
    }
}

type CResult = Result<Found, Failure>;

fn judge(expect: &Expect, found: &Found) -> Verdict {
    match (expect, found) {
        (_, Found::Undecided) => Verdict::Inconclusive,
        (Expect::Pass, Found::Holds) => Verdict::Pass,
        (Expect::Fail, Found::Fails | Found::Error { .. }) => Verdict::Pass,
        (Expect::Error(k), Found::Error { kind, .. }) if k == kind => Verdict::Pass,
        _ => Verdict::Fail,
    }
}

pub fn run(sc: &Scenario, name: &str, opts: &RunOptions) -> Report {
    let env = Env::build(sc, opts.seed);
    run_in(sc, &env, name, opts)
}

/// Runs every assertion (possibly on several threads); the report follows
/// declaration order.
pub fn run_in(sc: &Scenario, env: &Env, name: &str, opts: &RunOptions) -> Report {
    let n = sc.assertions.len();
    let slots: Mutex<Vec<Option<AssertionReport>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    let workers = opts.threads.clamp(1, n.max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= n {
                    break;
                }
                let rep = run_assertion(env, k, &sc.assertions[k], opts);
                slots.lock().expect("no poisoned workers")[k] = Some(rep);
            });
        }
    });
    let assertions: Vec<AssertionReport> =
        slots.into_inner().expect("no poisoned workers").into_iter().map(|r| r.expect("every slot filled")).collect();
    let mut summary = Summary::default();
    for a in &assertions {
        match a.verdict {
            Verdict::Pass => summary.passed += 1,
            Verdict::Fail => summary.failed += 1,
            Verdict::Inconclusive => summary.inconclusive += 1,
        }
    }
    let declaration_failures =
        env.failures.iter().map(|(line, name, reason)| DeclFailure { line: *line, name: name.clone(), reason: reason.clone() }).collect();
    Report {
        scenario: name.to_string(),
        seed: opts.seed,
        ansatz_degree: opts.ansatz_degree,
        fourier_modes: opts.fourier_modes,
        declaration_failures,
        assertions,
        summary,
    }
}

fn run_assertion(env: &Env, k: usize, a: &Assertion, opts: &RunOptions) -> AssertionReport {
    let seed = opts.seed.wrapping_add(1000 + k as u64);
    let mut rep = AssertionReport {
        index: k + 1,
        line: a.line,
        assertion: describe(a),
        expect: a.options.expect.to_string(),
        verdict: Verdict::Fail,
        outcome: String::new(),
        residuals: vec![],
        certificates: vec![],
        notes: vec![],
        failures: vec![],
        seed,
        millis: None,
    };
    let start = Instant::now();
    let ctx = Ctx {
        env,
        seed,
        degree: a.options.degree.unwrap_or(opts.ansatz_degree),
        modes: a.options.modes.unwrap_or(opts.fourier_modes),
        probes: &a.options.probes,
    };
    let found = match ctx.evaluate(&a.check, &mut rep) {
        Ok(f) => f,
        Err(Failure(f)) => f,
    };
    if let Found::Error { message, .. } = &found {
        rep.failures.push(message.clone());
    }
    rep.verdict = judge(&a.options.expect, &found);
    rep.outcome = found.describe();
    if opts.timings {
        rep.millis = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    rep
}

struct Ctx<'a> {
    env: &'a Env,
    seed: u64,
    degree: u32,
    modes: u32,
    probes: &'a [String],
}

fn residual(rep: &mut AssertionReport, label: impl Into<String>, a: &AlgebroidPresentation, diff: &ScalarFn) -> bool {
    let zero = diff.is_zero();
    let mut cr = CheckReport::new("");
    cr.residual(label, a.render_fn(diff), zero);
    rep.absorb(&cr);
    zero
}

fn form_residual(rep: &mut AssertionReport, label: impl Into<String>, a: &AlgebroidPresentation, diff: &modclass_core::FormField) -> bool {
    let zero = diff.is_zero();
    let mut cr = CheckReport::new("");
    cr.residual(label, a.render_form(diff), zero);
    rep.absorb(&cr);
    zero
}

fn holds(ok: bool) -> Found {
    if ok {
        Found::Holds
    } else {
        Found::Fails
    }
}

impl Ctx<'_> {
    fn space(&self, a: &AlgebroidPresentation) -> AnsatzSpace {
        AnsatzSpace::new(a.chart(), self.degree, self.modes)
    }

    fn probes(&self) -> Result<Vec<Morphism>, Failure> {
        self.probes.iter().map(|p| Ok(self.env.morphism(p)?.clone())).collect()
    }

    fn report(&self, rep: &mut AssertionReport, cr: &CheckReport) -> Found {
        rep.absorb(cr);
        Found::from(cr)
    }

    /// Three-valued class verdict compared with the expected label.
    fn class_outcome(&self, rep: &mut AssertionReport, a: &AlgebroidPresentation, v: &ClassVerdict, expected: &str) -> Found {
        rep.notes.push(format!("class verdict: {}", v.label()));
        match v {
            ClassVerdict::Exact(f) => rep.notes.push(format!("primitive: {}", a.render_fn(f))),
            ClassVerdict::CertifiedNonexact(c) => rep.certificates.push(c.to_string()),
            ClassVerdict::UnknownInAnsatz => {
                rep.notes.push(format!("no primitive in {}", self.space(a)));
            }
        }
        if v.label() == expected {
            Found::Holds
        } else if matches!(v, ClassVerdict::UnknownInAnsatz) {
            Found::Undecided
        } else {
            Found::Fails
        }
    }

    fn evaluate(&self, check: &Check, rep: &mut AssertionReport) -> CResult {
        let env = self.env;
        Ok(match check {
            Check::Axioms(a) => self.report(rep, &env.algebroid(a)?.check_axioms()),
            Check::Morphism(m) => self.report(rep, &env.morphism(m)?.check()),
            Check::Flat(r) => self.report(rep, &env.rep(r)?.check_flat()),
            Check::Equal(f, g) => {
                let (a, x) = env.form(f)?;
                let (_, y) = env.form(g)?;
                let alg = env.algebroid(a)?;
                rep.notes.push(format!("{f} = {}", alg.render_form(x)));
                holds(form_residual(rep, format!("{f} - {g}"), alg, &x.sub(y)))
            }
            Check::Pairing { form, frame, value } => {
                let (a, x) = env.form(form)?;
                let alg = env.algebroid(a)?;
                let diff = &x.coeff(&[*frame]) - value;
                rep.notes.push(format!("{form} = {}", alg.render_form(x)));
                holds(residual(rep, format!("<{form}, {}> - ({})", alg.frame()[*frame], alg.render_fn(value)), alg, &diff))
            }
            Check::Class { form, verdict } => {
                let (a, x) = env.form(form)?;
                let alg = env.algebroid(a)?;
                rep.notes.push(format!("{form} = {}", alg.render_form(x)));
                let c = CocycleClass::classify(alg, x, &self.space(alg), &self.probes()?, self.seed)?;
                self.class_outcome(rep, alg, &c.status, verdict)
            }
            Check::Cohomologous { left, right, verdict } => {
                let (a, x) = env.form(left)?;
                let (_, y) = env.form(right)?;
                let alg = env.algebroid(a)?;
                rep.notes.push(format!("{left} - {right} = {}", alg.render_form(&x.sub(y))));
                let v = cohomologous(alg, x, y, &self.space(alg), &self.probes()?, self.seed)?;
                self.class_outcome(rep, alg, &v, verdict)
            }
            Check::LieVolume { algebroid, frame, volume, value } => {
                let alg = env.algebroid(algebroid)?;
                let l = lie_top(alg.anchor_row(*frame), &VolumeForm::new(volume.clone()));
                let diff = &l.coeff - value;
                rep.notes.push(format!("L_{} ({}) = {}", alg.frame()[*frame], alg.render_fn(volume), alg.render_fn(&l.coeff)));
                holds(residual(rep, "Lie derivative - expected", alg, &diff))
            }
            Check::PullbackFn { morphism, f, value } => {
                let m = env.morphism(morphism)?;
                let g = m.pullback_fn(f)?;
                holds(residual(rep, "phi^* f - expected", m.source(), &(&g - value)))
            }
            Check::PullbackD(morphism) => {
                let m = env.morphism(morphism)?;
                let (a, b) = (m.source(), m.target());
                let mut ok = true;
                for (j, h) in b.chart().coords().iter().enumerate() {
                    let hf = ScalarFn::var(b.dim(), j);
                    let lhs = m.pullback_form(&b.d(&b.function(hf.clone())))?;
                    let rhs = a.d(&a.function(m.pullback_fn(&hf)?));
                    ok &= form_residual(rep, format!("Phi^*(d {h}) - d({h} o phi)"), a, &lhs.sub(&rhs));
                }
                holds(ok)
            }
            Check::Admissible { pullback, rank } => {
                let (target, frame) = env.pullback_frame(pullback)?;
                let b = env.algebroid(target)?;
                let (rc, r) = check_admissible(b, &frame.chart, &frame.basemap, self.seed)?;
                rep.notes.push(rc.method());
                rep.notes.push(format!("constraint rank in [{}, {}], pull-back rank {r}", rc.min_rank, rc.max_rank));
                let mut ok = rc.constant();
                if !ok {
                    rep.failures.push(format!("constraint rank varies between {} and {}", rc.min_rank, rc.max_rank));
                }
                if let Some(want) = rank {
                    if *want != r {
                        rep.failures.push(format!("pull-back rank {r}, expected {want}"));
                        ok = false;
                    }
                }
                holds(ok)
            }
            Check::Transverse(pullback) => {
                let (target, frame) = env.pullback_frame(pullback)?;
                let b = env.algebroid(target)?;
                let (rc, t) = check_transverse(b, &frame.chart, &frame.basemap, self.seed)?;
                rep.notes.push(rc.method());
                rep.notes.push(format!("rank of T phi + rho_B in [{}, {}] against dim N = {}", rc.min_rank, rc.max_rank, b.dim()));
                if !t {
                    rep.failures.push("not transverse at every sampled point".into());
                }
                holds(t)
            }
            Check::PullbackIso { pullback, algebroid, projection } => {
                let pb = env.pullback(pullback)?;
                let alg = env.algebroid(algebroid)?;
                let (_, iso) = isomorphism_by_names(&pb.algebroid, alg)?;
                let mut found = self.report(rep, &iso);
                if let Some(m) = projection {
                    let m = env.morphism(m)?;
                    let p = &pb.projection;
                    let same_base = p.basemap() == m.basemap();
                    let mut ok = same_base;
                    let mut cr = CheckReport::new("");
                    cr.residual("projection base map vs given", if same_base { "0" } else { "differs" }, same_base);
                    for (i, name) in pb.algebroid.frame().iter().enumerate() {
                        let Some(j) = m.source().frame_index(name) else {
                            cr.fail(format!("frame element {name} missing in {}", m.source().name()));
                            ok = false;
                            continue;
                        };
                        for t in 0..p.target().rank() {
                            let diff = &p.fiber()[t][i] - &m.fiber()[t][j];
                            ok &= diff.is_zero();
                            cr.residual(
                                format!("projection[{}][{name}] - given", p.target().frame()[t]),
                                alg.render_fn(&diff),
                                diff.is_zero(),
                            );
                        }
                    }
                    rep.absorb(&cr);
                    if !ok {
                        found = Found::Fails;
                    }
                }
                found
            }
            Check::EllPhi { pullback, sections, mu } => {
                let pb = env.pullback(pullback)?;
                let s = env.sections(sections, pb.projection.target().name())?;
                self.report(rep, &verify_ell_phi(pb, &s.top, &s.volume, mu)?)
            }
            Check::Factor { morphism, pullback } => {
                let (_, cr) = factorize(env.morphism(morphism)?, env.pullback(pullback)?)?;
                self.report(rep, &cr)
            }
            Check::NormalForm { algebroid, over, base_coords } => {
                let (_, cr) = verify_normal_form(env.algebroid(algebroid)?, env.algebroid(over)?, base_coords.clone(), self.seed)?;
                self.report(rep, &cr)
            }
            Check::Injective { pullback, form } => {
                let pb = env.pullback(pullback)?;
                let (_, x) = env.form(form)?;
                let cr = modclass_core::cohomology::check_pullback_injectivity(
                    pb,
                    x,
                    &self.space(pb.projection.target()),
                    &self.space(&pb.algebroid),
                    self.seed,
                )?;
                self.report(rep, &cr)
            }
            Check::RepDphi { morphism, sa, sb } => {
                let m = env.morphism(morphism)?;
                let sa = env.sections(sa, m.source().name())?;
                let sb = env.sections(sb, m.target().name())?;
                let (d, lambda) = m.rep_dphi(&sa, &sb)?;
                let ch = d.char_cocycle(&lambda)?;
                let rel = m.relative_modular(&sa, &sb)?;
                let a = m.source();
                rep.notes.push(format!("char D^Phi = {}", a.render_form(&ch)));
                rep.notes.push(format!("Mod Phi = {}", a.render_form(&rel)));
                holds(form_residual(rep, "char D^Phi - Mod Phi", a, &ch.sub(&rel)))
            }
            Check::PullbackChar { morphism, rep: r, lambda } => {
                let m = env.morphism(morphism)?;
                let d = env.rep(r)?;
                let b = m.target();
                let lam = match lambda {
                    Some(f) => LineSection::asserted(f.clone(), b.chart(), self.seed)?,
                    None => LineSection::one(b.dim()),
                };
                let pulled_lam = LineSection::asserted(m.pullback_fn(lam.coeff())?, m.source().chart(), self.seed)?;
                let lhs = m.pullback_rep(d)?.char_cocycle(&pulled_lam)?;
                let rhs = m.pullback_form(&d.char_cocycle(&lam)?)?;
                rep.notes.push(format!("char(Phi^! D) = {}", m.source().render_form(&lhs)));
                holds(form_residual(rep, "char(Phi^! D) - Phi^*(char D)", m.source(), &lhs.sub(&rhs)))
            }
            Check::RepProjection { morphism, rep: r } => {
                let m = env.morphism(morphism)?;
                let d = env.rep(r)?;
                let k = d.fiber_rank();
                let n = m.source().dim();
                let id = (0..k).map(|u| (0..k).map(|s| ScalarFn::int(n, (u == s) as i64)).collect()).collect();
                let pulled = m.pullback_rep(d)?;
                self.report(rep, &check_rep_morphism(&id, &pulled, d, m)?)
            }
            Check::Extension { extension, sa, sb } => {
                let ext = env.extension(extension)?;
                let sa = env.sections(sa, ext.a.name())?;
                let sb = env.sections(sb, ext.b.name())?;
                let dbk = induced_rep(ext)?;
                rep.notes.push(format!("D^(B,K) coefficients: {}", render_list(&ext.b, &dbk.line_coeffs()?)));
                let space = self.space(&ext.a);
                self.report(rep, &verify_thm45(ext, &sa, &sb, &space, &self.probes()?, self.seed)?)
            }
            Check::Unimodular(extension) => {
                let ext = env.extension(extension)?;
                let d = top_rep(ext)?;
                rep.notes.push(format!("D^(A, top C) coefficients: {}", render_list(&ext.a, &d.line_coeffs()?)));
                Found::Holds
            }
            Check::ConstantRank { quotient, sa } => {
                let (m, data) = env.quotient(quotient)?;
                let phi = env.morphism(m)?;
                let sa = env.sections(sa, phi.source().name())?;
                let out = verify_thm47(phi, data, &sa, &self.space(phi.source()), &self.probes()?, self.seed)?;
                self.report(rep, &out.report)
            }
            Check::RegularPoisson { poisson, quotient } => {
                let (chart, pi) = env.poisson(poisson)?;
                let (_, data) = env.quotient(quotient)?;
                let named = env.algebroid(poisson)?;
                let cot = cotangent_algebroid(chart, pi)?;
                // probes into the named cotangent algebroid are retargeted
                let probes = self
                    .probes()?
                    .into_iter()
                    .map(|p| {
                        if p.target() == named {
                            Morphism::new(p.name(), p.source().clone(), cot.clone(), p.basemap().to_vec(), p.fiber().clone())
                        } else {
                            Ok(p)
                        }
                    })
                    .collect::<modclass_core::Result<Vec<_>>>()?;
                let space = AnsatzSpace::new(chart, self.degree, self.modes);
                let (cr, _) = verify_regular_poisson(chart, pi, data, &space, &probes, self.seed)?;
                self.report(rep, &cr)
            }
            Check::Diagram { diagram, check } => {
                let (dg, secs) = env.diagram(diagram)?;
                match check {
                    DiagramCheck::Associativity => self.report(rep, &dg.check_associativity()),
                    DiagramCheck::Coboundary => {
                        let (d, m) = (self.degree, self.modes);
                        let cr = verify_mod_coboundary(dg, secs, None, &|a| AnsatzSpace::new(a.chart(), d, m), self.seed)?;
                        self.report(rep, &cr)
                    }
                    DiagramCheck::DeltaSquared => {
                        let mut sampler = Sampler::new(self.seed);
                        let mut u: Cochain0 = mod_cochain(dg, secs)?;
                        for (name, a) in dg.objects() {
                            let f = random_polynomial(&mut sampler, a.dim());
                            let du = a.d(&a.function(f));
                            let entry = u.get_mut(name).expect("every object has a cochain entry");
                            *entry = entry.add(&du);
                        }
                        let v = delta0(dg, &u)?;
                        let mut cr = CheckReport::new("delta delta u");
                        for ((f, g), val) in delta1(dg, &v)? {
                            let a = dg.arrow(&f).expect("arrow of the diagram").morphism.source();
                            cr.residual(format!("(delta delta u)({f}, {g})"), a.render_form(&val), val.is_zero());
                        }
                        cr.note(format!("{} composable pairs", cr.residuals.len()));
                        self.report(rep, &cr)
                    }
                    DiagramCheck::Terminal(point) => {
                        let u = mod_cochain(dg, secs)?;
                        let v = delta0(dg, &u)?;
                        let (w, cr) = coboundary_from_terminal(dg, &v, point)?;
                        let diffs: BTreeMap<&String, bool> = w.iter().map(|(k, x)| (k, x.is_zero())).collect();
                        rep.notes.push(format!(
                            "u(A) = v(p_A) vanishes on {:?}",
                            diffs.iter().filter(|(_, z)| **z).map(|(k, _)| k.as_str()).collect::<Vec<_>>()
                        ));
                        self.report(rep, &cr)
                    }
                }
            }
            Check::Composition { first, second, sa, sb, sc } => {
                let (f, g) = (env.morphism(first)?, env.morphism(second)?);
                let sa = env.sections(sa, f.source().name())?;
                let sb = env.sections(sb, f.target().name())?;
                let sc = env.sections(sc, g.target().name())?;
                self.report(rep, &check_composition_law(f, g, &sa, &sb, &sc)?)
            }
        })
    }
}

fn describe(a: &Assertion) -> String {
    let mut s = a.text.clone();
    if let Some(d) = a.options.degree {
        s.push_str(&format!(" degree={d}"));
    }
    if let Some(m) = a.options.modes {
        s.push_str(&format!(" modes={m}"));
    }
    if !a.options.probes.is_empty() {
        s.push_str(&format!(" probes={}", a.options.probes.join(",")));
    }
    s
}

fn render_list(a: &AlgebroidPresentation, fs: &[ScalarFn]) -> String {
    let parts: Vec<String> = a.frame().iter().zip(fs).map(|(n, f)| format!("{n}: {}", a.render_fn(f))).collect();
    parts.join(", ")
}

/// Random polynomial of degree at most 2 with small integer coefficients.
pub fn random_polynomial(s: &mut Sampler, dim: usize) -> ScalarFn {
    let mut f = ScalarFn::zero(dim);
    for i in 0..dim {
        f = &f + &ScalarFn::var(dim, i).scale(&modclass_core::symexpr::q(s.int(-3, 3)));
        for j in i..dim {
            let c = modclass_core::symexpr::q(s.int(-2, 2));
            f = &f + &(&ScalarFn::var(dim, i) * &ScalarFn::var(dim, j)).scale(&c);
        }
    }
    f
}
