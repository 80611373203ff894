//! Single-object subcommands: thin wrappers over one core operation each.

use std::fmt::Write as _;

use modclass_core::category::{delta0, mod_cochain, verify_mod_coboundary};
use modclass_core::cohomology::{AnsatzSpace, CocycleClass, Verdict as ClassVerdict};
use modclass_core::extension::{adjoint_rep, induced_rep, top_rep, verify_thm45};
use modclass_core::report::CheckReport;
use modclass_core::{AlgebroidPresentation, FormField, LineSection};
use serde::Serialize;

use crate::env::{Env, Unavailable};
use crate::runner::RunOptions;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub title: String,
    pub passed: bool,
    pub residuals: Vec<crate::report::ResidualEntry>,
    pub notes: Vec<String>,
    pub failures: Vec<String>,
}

impl From<&CheckReport> for CheckSummary {
    fn from(r: &CheckReport) -> Self {
        Self {
            title: r.title.clone(),
            passed: r.passed(),
            residuals: r
                .residuals
                .iter()
                .map(|x| crate::report::ResidualEntry { label: x.label.clone(), value: x.value.clone(), zero: x.zero })
                .collect(),
            notes: r.notes.clone(),
            failures: r.failures.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandOutput {
    pub command: String,
    pub scenario: String,
    pub object: Option<String>,
    pub fields: Vec<Field>,
    pub checks: Vec<CheckSummary>,
    pub ok: bool,
}

impl CommandOutput {
    fn new(command: &str, scenario: &str, object: Option<&str>) -> Self {
        Self {
            command: command.into(),
            scenario: scenario.into(),
            object: object.map(str::to_string),
            fields: vec![],
            checks: vec![],
            ok: true,
        }
    }

    fn field(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.fields.push(Field { key: key.into(), value: value.into() });
    }

    fn check(&mut self, r: &CheckReport) {
        self.ok &= r.passed();
        self.checks.push(r.into());
    }

    fn class(&mut self, a: &AlgebroidPresentation, v: &ClassVerdict) {
        self.field("class", v.label());
        match v {
            ClassVerdict::Exact(f) => self.field("primitive", a.render_fn(f)),
            ClassVerdict::CertifiedNonexact(c) => self.field("certificate", c.to_string()),
            ClassVerdict::UnknownInAnsatz => {}
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outputs serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{} {}", self.command, self.scenario);
        if let Some(o) = &self.object {
            let _ = write!(s, " {o}");
        }
        s.push('\n');
        for f in &self.fields {
            let _ = writeln!(s, "  {}: {}", f.key, f.value);
        }
        for c in &self.checks {
            let _ = writeln!(s, "  {}: {}", c.title, if c.passed { "pass" } else { "fail" });
            for r in &c.residuals {
                let _ = writeln!(s, "    {} = {}", r.label, r.value);
            }
            for n in &c.notes {
                let _ = writeln!(s, "    note: {n}");
            }
            for f in &c.failures {
                let _ = writeln!(s, "    failure: {f}");
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct CommandError(pub String);

impl From<Unavailable> for CommandError {
    fn from(u: Unavailable) -> Self {
        CommandError(u.0)
    }
}

impl From<modclass_core::Error> for CommandError {
    fn from(e: modclass_core::Error) -> Self {
        CommandError(e.to_string())
    }
}

type CmdResult = Result<CommandOutput, CommandError>;

fn space(a: &AlgebroidPresentation, opts: &RunOptions) -> AnsatzSpace {
    AnsatzSpace::new(a.chart(), opts.ansatz_degree, opts.fourier_modes)
}

fn seed_of(opts: &RunOptions) -> u64 {
    opts.seed
}

pub fn render_presentation(a: &AlgebroidPresentation) -> Vec<Field> {
    let mut out = vec![Field {
        key: "presentation".into(),
        value: format!("{} over {} ({}), rank {}", a.name(), a.chart().name(), a.chart().coords().join(", "), a.rank()),
    }];
    for (i, e) in a.frame().iter().enumerate() {
        let v: Vec<String> = a.anchor_row(i).iter().map(|f| a.render_fn(f)).collect();
        out.push(Field { key: format!("anchor {e}"), value: format!("({})", v.join(", ")) });
    }
    for i in 0..a.rank() {
        for j in i + 1..a.rank() {
            let c = a.bracket_coeffs(i, j);
            if c.iter().all(|f| f.is_zero()) {
                continue;
            }
            let v: Vec<String> = c.iter().map(|f| a.render_fn(f)).collect();
            out.push(Field { key: format!("[{}, {}]", a.frame()[i], a.frame()[j]), value: format!("({})", v.join(", ")) });
        }
    }
    out
}

pub fn validate(sc: &Scenario, name: &str, env: &Env) -> CmdResult {
    let mut out = CommandOutput::new("validate", name, None);
    for (line, n, why) in &env.failures {
        out.ok = false;
        out.field(format!("declaration {n} (line {line})"), format!("not built: {why}"));
    }
    for a in sc.algebroid_names() {
        if let Ok(alg) = env.algebroid(a) {
            let mut r = alg.check_axioms();
            r.title = format!("axioms of {a}");
            out.check(&r);
        }
    }
    for m in sc.names_of("morphism") {
        if let Ok(phi) = env.morphism(&m) {
            let mut r = phi.check();
            r.title = format!("morphism {m}");
            out.check(&r);
        }
    }
    for r in sc.names_of("rep") {
        if let Ok(d) = env.rep(&r) {
            let mut c = d.check_flat();
            c.title = format!("flatness of {r}");
            out.check(&c);
        }
    }
    Ok(out)
}

pub fn modular(sc: &Scenario, name: &str, env: &Env, alg: &str, sections: Option<&str>, opts: &RunOptions) -> CmdResult {
    let a = env.algebroid(alg)?;
    let sname = sections.map_or_else(|| sc.default_sections(alg), str::to_string);
    let s = env.sections(&sname, alg)?;
    let beta = s.modular(a)?;
    let mut out = CommandOutput::new("modular", name, Some(alg));
    out.field("sections", format!("{sname}: top {}, volume {}", a.render_fn(&s.top), a.render_fn(&s.volume)));
    out.field("modular cocycle", a.render_form(&beta));
    for (i, e) in a.frame().iter().enumerate() {
        out.field(format!("<beta, {e}>"), a.render_fn(&beta.coeff(&[i])));
    }
    let c = CocycleClass::classify(a, &beta, &space(a, opts), &[], seed_of(opts))?;
    out.class(a, &c.status);
    Ok(out)
}

pub fn relmod(sc: &Scenario, name: &str, env: &Env, m: &str, opts: &RunOptions) -> CmdResult {
    let phi = env.morphism(m)?;
    let (src, tgt) = sc.morphism_ends(m).ok_or_else(|| CommandError(format!("unknown morphism `{m}`")))?;
    let (na, nb) = (sc.default_sections(src), sc.default_sections(tgt));
    let (sa, sb) = (env.sections(&na, src)?, env.sections(&nb, tgt)?);
    let a = phi.source();
    let mut out = CommandOutput::new("relmod", name, Some(m));
    out.check(&phi.check());
    let rel = phi.relative_modular(&sa, &sb)?;
    out.field("sections", format!("{na} on {src}, {nb} on {tgt}"));
    out.field("relative modular cocycle", a.render_form(&rel));
    let (d, lambda) = phi.rep_dphi(&sa, &sb)?;
    let ch = d.char_cocycle(&lambda)?;
    let mut r = CheckReport::new("char D^Phi = Mod Phi");
    let diff = ch.sub(&rel);
    r.residual("char D^Phi - Mod Phi", a.render_form(&diff), diff.is_zero());
    out.check(&r);
    let c = CocycleClass::classify(a, &rel, &space(a, opts), &[], seed_of(opts))?;
    out.class(a, &c.status);
    Ok(out)
}

pub fn pullback(name: &str, env: &Env, p: &str) -> CmdResult {
    let pb = env.pullback(p)?;
    let mut out = CommandOutput::new("pullback", name, Some(p));
    out.fields.extend(render_presentation(&pb.algebroid));
    let proj = &pb.projection;
    let base: Vec<String> = proj.basemap().iter().map(|f| pb.algebroid.render_fn(f)).collect();
    out.field("base map", format!("({})", base.join(", ")));
    for (t, e) in proj.target().frame().iter().enumerate() {
        let row: Vec<String> = proj.fiber()[t].iter().map(|f| pb.algebroid.render_fn(f)).collect();
        out.field(format!("projection row {e}"), format!("({})", row.join(", ")));
    }
    out.field("admissibility", pb.admissibility.method());
    let mut ax = pb.algebroid.check_axioms();
    ax.title = format!("axioms of {p}");
    out.check(&ax);
    out.check(&proj.check());
    Ok(out)
}

pub fn char_cmd(sc: &Scenario, name: &str, env: &Env, r: &str, lambda: Option<&str>, opts: &RunOptions) -> CmdResult {
    let d = env.rep(r)?;
    let a = d.algebroid();
    let lam = match lambda {
        Some(text) => LineSection::asserted(a.chart().parse(text)?, a.chart(), opts.seed)?,
        None => LineSection::one(a.dim()),
    };
    let _ = sc;
    let mut out = CommandOutput::new("char", name, Some(r));
    out.check(&d.check_flat());
    let ch = d.char_cocycle(&lam)?;
    out.field("lambda", a.render_fn(lam.coeff()));
    out.field("characteristic cocycle", a.render_form(&ch));
    let c = CocycleClass::classify(a, &ch, &space(a, opts), &[], seed_of(opts))?;
    out.class(a, &c.status);
    Ok(out)
}

pub fn extension(sc: &Scenario, name: &str, env: &Env, e: &str, opts: &RunOptions) -> CmdResult {
    let ext = env.extension(e)?;
    let mut out = CommandOutput::new("extension", name, Some(e));
    let ad = adjoint_rep(ext)?;
    for (i, x) in ext.a.frame().iter().enumerate() {
        let rows: Vec<String> =
            ad.gamma(i).iter().map(|row| row.iter().map(|f| ext.a.render_fn(f)).collect::<Vec<_>>().join(", ")).collect();
        out.field(format!("adjoint gamma {x}"), format!("[{}]", rows.join("; ")));
    }
    match top_rep(ext) {
        Ok(t) => {
            out.field("top C coefficients", render_coeffs(&ext.a, &t.line_coeffs()?));
            let k = induced_rep(ext)?;
            out.field("D^(B,K) coefficients", render_coeffs(&ext.b, &k.line_coeffs()?));
            out.field("lambda", ext.a.render_fn(ext.lambda.coeff()));
            let sa = env.sections(&sc.default_sections(ext.a.name()), ext.a.name())?;
            let sb = env.sections(&sc.default_sections(ext.b.name()), ext.b.name())?;
            out.check(&verify_thm45(ext, &sa, &sb, &space(&ext.a, opts), &[], opts.seed)?);
        }
        Err(err) => {
            out.ok = false;
            out.field("top C", format!("{err}"));
        }
    }
    Ok(out)
}

fn render_coeffs(a: &AlgebroidPresentation, fs: &[modclass_core::ScalarFn]) -> String {
    let parts: Vec<String> = a.frame().iter().zip(fs).map(|(n, f)| format!("{n}: {}", a.render_fn(f))).collect();
    parts.join(", ")
}

pub fn diagram(name: &str, env: &Env, d: &str, opts: &RunOptions) -> CmdResult {
    let (dg, secs) = env.diagram(d)?;
    let mut out = CommandOutput::new("diagram", name, Some(d));
    let objects: Vec<&str> = dg.objects().iter().map(|(n, _)| n.as_str()).collect();
    out.field("objects", objects.join(", "));
    let arrows: Vec<String> = dg.arrows().iter().map(|a| format!("{}: {} -> {}", a.name, a.source, a.target)).collect();
    out.field("arrows", arrows.join(", "));
    out.field("declared compositions", dg.compositions().len().to_string());
    let u = mod_cochain(dg, secs)?;
    let v = delta0(dg, &u)?;
    for ar in dg.arrows() {
        let val: &FormField = &v[&ar.name];
        out.field(format!("delta(Mod)({})", ar.name), ar.morphism.source().render_form(val));
    }
    out.check(&dg.check_associativity());
    let (deg, modes) = (opts.ansatz_degree, opts.fourier_modes);
    out.check(&verify_mod_coboundary(dg, secs, None, &|a| AnsatzSpace::new(a.chart(), deg, modes), opts.seed)?);
    Ok(out)
}
