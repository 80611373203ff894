//! Scenario files: a sectioned, line-oriented declaration language whose
//! expressions are parsed by the symexpr grammar.
//!
//! Parsing resolves every name (charts, frame elements, algebroids,
//! morphisms, ...) against a symbol table built in declaration order, so a
//! reference to an undeclared symbol is reported with its line. Objects are
//! materialized later by the runner, which owns the seed.

use std::collections::BTreeMap;
use std::fmt;

use modclass_core::extension::QuotientRepData;
use modclass_core::{Chart, Multivector, ScalarFn};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

type PResult<T> = Result<T, ScenarioError>;

fn err<T>(line: usize, message: impl Into<String>) -> PResult<T> {
    Err(ScenarioError { line, message: message.into() })
}

#[derive(Debug, Clone)]
pub enum AlgebroidSpec {
    Tangent,
    Zero,
    Explicit { frame: Vec<String>, anchor: Vec<Vec<ScalarFn>>, brackets: Vec<(usize, usize, Vec<ScalarFn>)> },
    Poisson { pi: Multivector },
    Pullback { target: String, frame: FrameSpec },
}

#[derive(Debug, Clone)]
pub enum FrameSpec {
    /// Product submersion over the listed chart coordinates.
    Product {
        base_coords: Vec<usize>,
    },
    User {
        basemap: Vec<ScalarFn>,
        pairs: Vec<(String, Vec<ScalarFn>, Vec<ScalarFn>)>,
    },
}

#[derive(Debug, Clone)]
pub enum MorphismSpec {
    Explicit { source: String, target: String, basemap: Vec<ScalarFn>, fiber: Vec<Vec<ScalarFn>> },
    Tangent { source: String, target: String, basemap: Vec<ScalarFn> },
    Compose { first: String, second: String },
    Sharp { poisson: String },
    Identity { algebroid: String },
    Project { pullback: String },
    Factor { morphism: String, pullback: String },
}

#[derive(Debug, Clone)]
pub enum LambdaSpec {
    One,
    Expr(ScalarFn),
    Compatible { sa: String, sb: String },
}

#[derive(Debug, Clone)]
pub enum FormSpec {
    Modular { algebroid: String, sections: String },
    Relmod { morphism: String, sa: String, sb: String },
    Char { rep: String, lambda: Option<ScalarFn> },
    Literal { algebroid: String, coeffs: Vec<ScalarFn> },
    Exact { algebroid: String, f: ScalarFn },
    Pullback { morphism: String, form: String },
    Sum { left: String, right: String, sign: i64 },
}

#[derive(Debug, Clone)]
pub enum DeclKind {
    Chart(Chart),
    Algebroid {
        chart: String,
        spec: AlgebroidSpec,
    },
    Rep {
        algebroid: String,
        fiber: Vec<String>,
        gammas: Vec<Option<Vec<Vec<ScalarFn>>>>,
    },
    /// `dual R` when `right` is `None`, else `tensor R S`.
    RepOp {
        left: String,
        right: Option<String>,
    },
    Morphism(MorphismSpec),
    Sections {
        algebroid: String,
        top: ScalarFn,
        volume: ScalarFn,
    },
    Extension {
        inclusion: String,
        projection: String,
        lambda: LambdaSpec,
        lifts: Option<Vec<Vec<ScalarFn>>>,
    },
    Quotient {
        morphism: String,
        data: QuotientRepData,
    },
    Diagram {
        objects: Vec<String>,
        arrows: Vec<String>,
        compositions: Vec<(String, String, String)>,
        close: bool,
        sections: Vec<(String, String)>,
    },
    Form {
        algebroid: String,
        spec: FormSpec,
    },
}

#[derive(Debug, Clone)]
pub struct Decl {
    pub line: usize,
    pub name: String,
    pub kind: DeclKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expect {
    Pass,
    Fail,
    /// An error of the named kind.
    Error(String),
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expect::Pass => write!(f, "pass"),
            Expect::Fail => write!(f, "fail"),
            Expect::Error(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssertOptions {
    pub expect: Expect,
    pub degree: Option<u32>,
    pub modes: Option<u32>,
    pub probes: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum DiagramCheck {
    Associativity,
    Coboundary,
    DeltaSquared,
    Terminal(String),
}

#[derive(Debug, Clone)]
pub enum Check {
    Axioms(String),
    Morphism(String),
    Flat(String),
    Equal(String, String),
    Pairing { form: String, frame: usize, value: ScalarFn },
    Class { form: String, verdict: String },
    Cohomologous { left: String, right: String, verdict: String },
    LieVolume { algebroid: String, frame: usize, volume: ScalarFn, value: ScalarFn },
    PullbackFn { morphism: String, f: ScalarFn, value: ScalarFn },
    PullbackD(String),
    Admissible { pullback: String, rank: Option<usize> },
    Transverse(String),
    PullbackIso { pullback: String, algebroid: String, projection: Option<String> },
    EllPhi { pullback: String, sections: String, mu: ScalarFn },
    Factor { morphism: String, pullback: String },
    NormalForm { algebroid: String, over: String, base_coords: Vec<usize> },
    Injective { pullback: String, form: String },
    RepDphi { morphism: String, sa: String, sb: String },
    PullbackChar { morphism: String, rep: String, lambda: Option<ScalarFn> },
    RepProjection { morphism: String, rep: String },
    Extension { extension: String, sa: String, sb: String },
    Unimodular(String),
    ConstantRank { quotient: String, sa: String },
    RegularPoisson { poisson: String, quotient: String },
    Diagram { diagram: String, check: DiagramCheck },
    Composition { first: String, second: String, sa: String, sb: String, sc: String },
}

#[derive(Debug, Clone)]
pub struct Assertion {
    pub line: usize,
    pub text: String,
    pub check: Check,
    pub options: AssertOptions,
}

/// A parsed scenario with every reference resolved.
#[derive(Debug, Clone, Default)]
pub struct Scenario {
    pub decls: Vec<Decl>,
    pub assertions: Vec<Assertion>,
    symbols: Symbols,
}

impl Scenario {
    pub fn is_empty(&self) -> bool {
        self.decls.is_empty() && self.assertions.is_empty()
    }

    pub fn algebroid_names(&self) -> impl Iterator<Item = &str> {
        self.decls.iter().filter(|d| matches!(d.kind, DeclKind::Algebroid { .. })).map(|d| d.name.as_str())
    }

    pub fn names_of(&self, kind: &str) -> Vec<String> {
        self.decls.iter().filter(|d| decl_kind_name(&d.kind) == kind).map(|d| d.name.clone()).collect()
    }

    /// Sections used when none are named: the first declared for the
    /// algebroid, else `standard`.
    pub fn default_sections(&self, algebroid: &str) -> String {
        self.symbols.default_sections.get(algebroid).cloned().unwrap_or_else(|| "standard".into())
    }

    pub fn algebroid_of_form(&self, form: &str) -> Option<&str> {
        self.symbols.forms.get(form).map(String::as_str)
    }

    pub fn morphism_ends(&self, m: &str) -> Option<(&str, &str)> {
        self.symbols.morphisms.get(m).map(|(s, t)| (s.as_str(), t.as_str()))
    }

    pub fn rep_algebroid(&self, r: &str) -> Option<&str> {
        self.symbols.reps.get(r).map(String::as_str)
    }
}

pub fn decl_kind_name(k: &DeclKind) -> &'static str {
    match k {
        DeclKind::Chart(_) => "chart",
        DeclKind::Algebroid { .. } => "algebroid",
        DeclKind::Rep { .. } | DeclKind::RepOp { .. } => "rep",
        DeclKind::Morphism(_) => "morphism",
        DeclKind::Sections { .. } => "sections",
        DeclKind::Extension { .. } => "extension",
        DeclKind::Quotient { .. } => "quotient",
        DeclKind::Diagram { .. } => "diagram",
        DeclKind::Form { .. } => "form",
    }
}

#[derive(Debug, Clone, Default)]
struct Symbols {
    charts: BTreeMap<String, Chart>,
    /// algebroid -> (chart, frame)
    algebroids: BTreeMap<String, (String, Vec<String>)>,
    poisson: BTreeMap<String, String>,
    pullbacks: BTreeMap<String, String>,
    reps: BTreeMap<String, String>,
    morphisms: BTreeMap<String, (String, String)>,
    sections: BTreeMap<String, String>,
    default_sections: BTreeMap<String, String>,
    extensions: BTreeMap<String, (String, String)>,
    quotients: BTreeMap<String, String>,
    diagrams: BTreeMap<String, Vec<String>>,
    forms: BTreeMap<String, String>,
}

impl Symbols {
    fn taken(&self, name: &str) -> bool {
        self.charts.contains_key(name)
            || self.algebroids.contains_key(name)
            || self.reps.contains_key(name)
            || self.morphisms.contains_key(name)
            || self.sections.contains_key(name)
            || self.extensions.contains_key(name)
            || self.quotients.contains_key(name)
            || self.diagrams.contains_key(name)
            || self.forms.contains_key(name)
    }

    fn chart(&self, line: usize, name: &str) -> PResult<&Chart> {
        self.charts.get(name).map_or_else(|| err(line, format!("unknown chart `{name}`")), Ok)
    }

    fn algebroid(&self, line: usize, name: &str) -> PResult<(&Chart, &[String])> {
        match self.algebroids.get(name) {
            Some((c, f)) => Ok((&self.charts[c], f)),
            None => err(line, format!("unknown algebroid `{name}`")),
        }
    }

    fn frame_index(&self, line: usize, alg: &str, elt: &str) -> PResult<usize> {
        let (_, frame) = self.algebroid(line, alg)?;
        frame.iter().position(|f| f == elt).map_or_else(|| err(line, format!("unknown frame element `{elt}` in algebroid `{alg}`")), Ok)
    }

    fn morphism(&self, line: usize, name: &str) -> PResult<(String, String)> {
        self.morphisms.get(name).cloned().map_or_else(|| err(line, format!("unknown morphism `{name}`")), Ok)
    }

    fn sections_for(&self, line: usize, name: &str, alg: &str) -> PResult<()> {
        if name == "standard" {
            return Ok(());
        }
        match self.sections.get(name) {
            Some(a) if a == alg => Ok(()),
            Some(a) => err(line, format!("sections `{name}` belong to `{a}`, not `{alg}`")),
            None => err(line, format!("unknown sections `{name}`")),
        }
    }

    fn form(&self, line: usize, name: &str) -> PResult<String> {
        self.forms.get(name).cloned().map_or_else(|| err(line, format!("unknown form `{name}`")), Ok)
    }

    fn simple(&self, line: usize, table: &BTreeMap<String, String>, what: &str, name: &str) -> PResult<String> {
        table.get(name).cloned().map_or_else(|| err(line, format!("unknown {what} `{name}`")), Ok)
    }
}

/// Splits at top-level occurrences of `sep` (outside parentheses and brackets).
fn split_top(text: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if ch == sep && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(ch);
        }
    }
    out.push(cur.trim().to_string());
    out
}

fn parse_fn(line: usize, chart: &Chart, text: &str) -> PResult<ScalarFn> {
    if text.trim().is_empty() {
        return err(line, "missing expression");
    }
    chart.parse(text.trim()).map_err(|e| ScenarioError { line, message: format!("in `{}`: {e}", text.trim()) })
}

fn parse_list(line: usize, chart: &Chart, text: &str, expected: usize) -> PResult<Vec<ScalarFn>> {
    if expected == 0 && text.trim().is_empty() {
        return Ok(vec![]);
    }
    let parts = split_top(text, ',');
    if parts.len() != expected {
        return err(line, format!("expected {expected} comma-separated entries, found {}", parts.len()));
    }
    parts.iter().map(|p| parse_fn(line, chart, p)).collect()
}

fn split_eq(line: usize, text: &str) -> PResult<(String, String)> {
    match text.split_once('=') {
        Some((l, r)) => Ok((l.trim().to_string(), r.trim().to_string())),
        None => err(line, format!("expected `=` in `{text}`")),
    }
}

fn ident(line: usize, s: &str) -> PResult<String> {
    let ok = !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || "_'^.!".contains(c)) && !s.starts_with(|c: char| c.is_ascii_digit());
    if ok {
        Ok(s.to_string())
    } else {
        err(line, format!("invalid name `{s}`"))
    }
}

/// `[a, b]` with two names.
fn bracket_pair(line: usize, s: &str) -> PResult<(String, String)> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .map_or_else(|| err(line, format!("expected `[a, b]`, found `{s}`")), Ok)?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return err(line, format!("expected two entries in `{s}`"));
    }
    Ok((parts[0].to_string(), parts[1].to_string()))
}

struct Line<'a> {
    no: usize,
    text: &'a str,
}

fn first_word(s: &str) -> (&str, &str) {
    let s = s.trim();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim()),
        None => (s, ""),
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, l)| Line { no: i + 1, text: l.split('#').next().unwrap_or("").trim() })
        .filter(|l| !l.text.is_empty())
        .collect();
    let mut p = Parser { sc: Scenario::default() };
    let mut i = 0;
    while i < lines.len() {
        let l = &lines[i];
        let (kw, rest) = first_word(l.text);
        let block = matches!(kw, "algebroid" | "poisson" | "pullback" | "extension" | "quotient" | "diagram")
            || (matches!(kw, "morphism" | "rep") && !rest.contains('='));
        if block {
            let mut j = i + 1;
            while j < lines.len() && lines[j].text != "end" {
                j += 1;
            }
            if j == lines.len() {
                return err(l.no, format!("`{kw}` block is not closed by `end`"));
            }
            p.block(l.no, kw, rest, &lines[i + 1..j])?;
            i = j + 1;
        } else {
            p.statement(l.no, kw, rest)?;
            i += 1;
        }
    }
    Ok(p.sc)
}

struct Parser {
    sc: Scenario,
}

impl Parser {
    fn sym(&self) -> &Symbols {
        &self.sc.symbols
    }

    fn declare(&mut self, line: usize, name: &str) -> PResult<String> {
        let name = ident(line, name)?;
        if self.sym().taken(&name) || name == "standard" {
            return err(line, format!("`{name}` is already declared"));
        }
        Ok(name)
    }

    fn push(&mut self, line: usize, name: String, kind: DeclKind) {
        self.sc.decls.push(Decl { line, name, kind });
    }

    fn add_algebroid(&mut self, line: usize, name: String, chart: String, frame: Vec<String>, spec: AlgebroidSpec) {
        self.sc.symbols.algebroids.insert(name.clone(), (chart.clone(), frame));
        self.push(line, name, DeclKind::Algebroid { chart, spec });
    }

    fn statement(&mut self, line: usize, kw: &str, rest: &str) -> PResult<()> {
        match kw {
            "chart" => self.chart(line, rest),
            "tangent" | "zero" => {
                let (name, chart) = on_clause(line, rest)?;
                let name = self.declare(line, &name)?;
                let c = self.sym().chart(line, &chart)?.clone();
                let (frame, spec) = if kw == "tangent" {
                    (c.coords().iter().map(|x| format!("d_{x}")).collect(), AlgebroidSpec::Tangent)
                } else {
                    (vec![], AlgebroidSpec::Zero)
                };
                self.add_algebroid(line, name, chart, frame, spec);
                Ok(())
            }
            "morphism" => self.morphism_oneline(line, rest),
            "rep" => self.rep_oneline(line, rest),
            "sections" => self.sections(line, rest),
            "form" => self.form(line, rest),
            "assert" => self.assertion(line, rest),
            _ => err(line, format!("unknown statement `{kw}`")),
        }
    }

    fn chart(&mut self, line: usize, rest: &str) -> PResult<()> {
        let (name, coords) = rest.split_once(':').map_or_else(|| err(line, "expected `chart NAME: coords`"), Ok)?;
        let name = self.declare(line, name.trim())?;
        let mut list = Vec::new();
        for part in coords.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let words: Vec<&str> = part.split_whitespace().collect();
            match words.as_slice() {
                [c] => list.push((ident(line, c)?, false)),
                [c, "periodic"] => list.push((ident(line, c)?, true)),
                _ => return err(line, format!("bad coordinate `{part}`")),
            }
        }
        let chart = Chart::from_owned(name.clone(), list).map_err(|e| ScenarioError { line, message: e.to_string() })?;
        self.sc.symbols.charts.insert(name.clone(), chart.clone());
        self.push(line, name, DeclKind::Chart(chart));
        Ok(())
    }

    fn sections(&mut self, line: usize, rest: &str) -> PResult<()> {
        // sections NAME for ALG: top = f; volume = g
        let (head, body) = rest.split_once(':').map_or_else(|| err(line, "expected `sections NAME for ALG: ...`"), Ok)?;
        let words: Vec<&str> = head.split_whitespace().collect();
        let [name, "for", alg] = words.as_slice() else {
            return err(line, "expected `sections NAME for ALG: top = ...; volume = ...`");
        };
        let name = self.declare(line, name)?;
        let (chart, _) = self.sym().algebroid(line, alg)?;
        let chart = chart.clone();
        let (mut top, mut volume) = (ScalarFn::one(chart.dim()), ScalarFn::one(chart.dim()));
        for part in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = split_eq(line, part)?;
            match k.as_str() {
                "top" => top = parse_fn(line, &chart, &v)?,
                "volume" => volume = parse_fn(line, &chart, &v)?,
                _ => return err(line, format!("unknown sections field `{k}`")),
            }
        }
        self.sc.symbols.sections.insert(name.clone(), alg.to_string());
        self.sc.symbols.default_sections.entry(alg.to_string()).or_insert_with(|| name.clone());
        self.push(line, name, DeclKind::Sections { algebroid: alg.to_string(), top, volume });
        Ok(())
    }

    fn block(&mut self, line: usize, kw: &str, header: &str, body: &[Line]) -> PResult<()> {
        match kw {
            "algebroid" => self.algebroid_block(line, header, body),
            "poisson" => self.poisson_block(line, header, body),
            "rep" => self.rep_block(line, header, body),
            "morphism" => self.morphism_block(line, header, body),
            "pullback" => self.pullback_block(line, header, body),
            "extension" => self.extension_block(line, header, body),
            "quotient" => self.quotient_block(line, header, body),
            "diagram" => self.diagram_block(line, header, body),
            _ => unreachable!("block keywords are matched by the caller"),
        }
    }

    fn algebroid_block(&mut self, line: usize, header: &str, body: &[Line]) -> PResult<()> {
        let (name, chart_name) = on_clause(line, header)?;
        let name = self.declare(line, &name)?;
        let chart = self.sym().chart(line, &chart_name)?.clone();
        let mut frame: Option<Vec<String>> = None;
        let mut anchor: Vec<Option<Vec<ScalarFn>>> = Vec::new();
        let mut brackets = Vec::new();
        for l in body {
            let (kw, rest) = first_word(l.text);
            match kw {
                "frame" => {
                    let f: Vec<String> = rest.split_whitespace().map(|w| ident(l.no, w)).collect::<PResult<_>>()?;
                    anchor = vec![None; f.len()];
                    frame = Some(f);
                }
                "anchor" | "bracket" => {
                    let Some(fr) = &frame else {
                        return err(l.no, "`frame` must come first");
                    };
                    let (lhs, rhs) = split_eq(l.no, rest)?;
                    let idx = |e: &str| {
                        fr.iter()
                            .position(|x| x == e)
                            .map_or_else(|| err(l.no, format!("unknown frame element `{e}` in algebroid `{name}`")), Ok)
                    };
                    if kw == "anchor" {
                        let i = idx(&lhs)?;
                        anchor[i] = Some(parse_list(l.no, &chart, &rhs, chart.dim())?);
                    } else {
                        let (a, b) = bracket_pair(l.no, &lhs)?;
                        let (i, j) = (idx(&a)?, idx(&b)?);
                        brackets.push((i, j, parse_list(l.no, &chart, &rhs, fr.len())?));
                    }
                }
                _ => return err(l.no, format!("unknown algebroid entry `{kw}`")),
            }
        }
        let Some(frame) = frame else {
            return err(line, format!("algebroid `{name}` has no frame"));
        };
        let n = chart.dim();
        let anchor = anchor.into_iter().map(|r| r.unwrap_or_else(|| vec![ScalarFn::zero(n); n])).collect();
        self.add_algebroid(line, name, chart_name, frame.clone(), AlgebroidSpec::Explicit { frame, anchor, brackets });
        Ok(())
    }

    fn poisson_block(&mut self, line: usize, header: &str, body: &[Line]) -> PResult<()> {
        let (name, chart_name) = on_clause(line, header)?;
        let name = self.declare(line, &name)?;
        let chart = self.sym().chart(line, &chart_name)?.clone();
        let n = chart.dim();
        let mut pi = Multivector::zero(n, n, 2);
        for l in body {
            let (kw, rest) = first_word(l.text);
            if kw != "pi" {
                return err(l.no, format!("unknown poisson entry `{kw}`"));
            }
            let (lhs, rhs) = split_eq(l.no, rest)?;
            let (a, b) = bracket_pair(l.no, &lhs)?;
            let ix = |c: &str| chart.index_of(c).map_or_else(|| err(l.no, format!("unknown coordinate `{c}`")), Ok);
            pi.add_at(vec![ix(&a)?, ix(&b)?], parse_fn(l.no, &chart, &rhs)?);
        }
        let frame = chart.coords().iter().map(|c| format!("d{c}")).collect();
        self.sc.symbols.poisson.insert(name.clone(), chart_name.clone());
        self.add_algebroid(line, name, chart_name, frame, AlgebroidSpec::Poisson { pi });
        Ok(())
    }

    fn rep_block(&mut self, line: usize, header: &str, body: &[Line]) -> PResult<()> {
        let words: Vec<&str> = header.split_whitespace().collect();
        let [name, "of", alg] = words.as_slice() else {
            return err(line, "expected `rep NAME of ALG`");
        };
        let name = self.declare(line, name)?;
        let (chart, frame) = self.sym().algebroid(line, alg)?;
        let (chart, frame) = (chart.clone(), frame.to_vec());
        let mut fiber = vec!["eps".to_string()];
        let mut gammas: Vec<Option<Vec<Vec<ScalarFn>>>> = vec![None; frame.len()];
        for l in body {
            let (kw, rest) = first_word(l.text);
            match kw {
                "fiber" => fiber = rest.split_whitespace().map(|w| ident(l.no, w)).collect::<PResult<_>>()?,
                "gamma" => {
                    let (lhs, rhs) = split_eq(l.no, rest)?;
                    let i = self.sym().frame_index(l.no, alg, &lhs)?;
                    let rows = split_top(&rhs, ';');
                    if rows.len() != fiber.len() {
                        return err(l.no, format!("gamma needs {} rows", fiber.len()));
                    }
                    gammas[i] = Some(rows.iter().map(|r| parse_list(l.no, &chart, r, fiber.len())).collect::<PResult<_>>()?);
                }
                _ => return err(l.no, format!("unknown rep entry `{kw}`")),
            }
        }
        self.sc.symbols.reps.insert(name.clone(), alg.to_string());
        self.push(line, name, DeclKind::Rep { algebroid: alg.to_string(), fiber, gammas });
        Ok(())
    }

    fn rep_oneline(&mut self, line: usize, rest: &str) -> PResult<()> {
        let (name, rhs) = split_eq(line, rest)?;
        let name = self.declare(line, &name)?;
        let words: Vec<&str> = rhs.split_whitespace().collect();
        let (alg, left, right) = match words.as_slice() {
            ["dual", r] => (self.sym().simple(line, &self.sym().reps, "rep", r)?, r.to_string(), None),
            ["tensor", r, t] => {
                let (a, b) = (self.sym().simple(line, &self.sym().reps, "rep", r)?, self.sym().simple(line, &self.sym().reps, "rep", t)?);
                if a != b {
                    return err(line, format!("`{r}` and `{t}` represent different algebroids"));
                }
                (a, r.to_string(), Some(t.to_string()))
            }
            _ => return err(line, format!("unknown rep constructor `{rhs}`")),
        };
        self.sc.symbols.reps.insert(name.clone(), alg);
        self.push(line, name, DeclKind::RepOp { left, right });
        Ok(())
    }

    fn morphism_block(&mut self, line: usize, header: &str, body: &[Line]) -> PResult<()> {
        // morphism NAME: SRC -> TGT
        let (name, ends) = header.split_once(':').map_or_else(|| err(line, "expected `morphism NAME: SRC -> TGT`"), Ok)?;
        let (src, tgt) = ends.split_once("->").map_or_else(|| err(line, "expected `SRC -> TGT`"), Ok)?;
        let (src, tgt) = (src.trim().to_string(), tgt.trim().to_string());
        let name = self.declare(line, name.trim())?;
        let (sc, sf) = self.sym().algebroid(line, &src)?;
        let (sc, sf) = (sc.clone(), sf.to_vec());
        let (tc, tf) = self.sym().algebroid(line, &tgt)?;
        let (tdim, tf) = (tc.dim(), tf.to_vec());
        let mut basemap: Option<Vec<ScalarFn>> = if tdim == 0 { Some(vec![]) } else { None };
        let mut fiber = vec![vec![ScalarFn::zero(sc.dim()); sf.len()]; tf.len()];
        let mut tangent = false;
        for l in body {
            let (kw, rest) = first_word(l.text);
            match kw {
                "basemap" => basemap = Some(parse_list(l.no, &sc, rest, tdim)?),
                "image" => {
                    let (lhs, rhs) = split_eq(l.no, rest)?;
                    let j = self.sym().frame_index(l.no, &src, &lhs)?;
                    for (t, f) in parse_list(l.no, &sc, &rhs, tf.len())?.into_iter().enumerate() {
                        fiber[t][j] = f;
                    }
                }
                "tangent" => tangent = true,
                _ => return err(l.no, format!("unknown morphism entry `{kw}`")),
            }
        }
        let Some(basemap) = basemap else {
            return err(line, format!("morphism `{name}` needs a basemap"));
        };
        self.sc.symbols.morphisms.insert(name.clone(), (src.clone(), tgt.clone()));
        let spec = if tangent {
            MorphismSpec::Tangent { source: src, target: tgt, basemap }
        } else {
            MorphismSpec::Explicit { source: src, target: tgt, basemap, fiber }
        };
        self.push(line, name, DeclKind::Morphism(spec));
        Ok(())
    }

    fn morphism_oneline(&mut self, line: usize, rest: &str) -> PResult<()> {
        let (name, rhs) = split_eq(line, rest)?;
        let name = self.declare(line, &name)?;
        let words: Vec<&str> = rhs.split_whitespace().collect();
        let (spec, ends) = match words.as_slice() {
            ["compose", f, g] => {
                let (s, t1) = self.sym().morphism(line, f)?;
                let (s2, t) = self.sym().morphism(line, g)?;
                if t1 != s2 {
                    return err(line, format!("`{g}` does not start where `{f}` ends"));
                }
                (MorphismSpec::Compose { first: f.to_string(), second: g.to_string() }, (s, t))
            }
            ["sharp", p] => {
                let chart = self.sym().simple(line, &self.sym().poisson, "poisson structure", p)?;
                let tangent = self
                    .sym()
                    .algebroids
                    .iter()
                    .find(|(_, (c, f))| {
                        c == &chart
                            && f.iter().zip(self.sym().charts[&chart].coords()).all(|(a, b)| a == &format!("d_{b}"))
                            && f.len() == self.sym().charts[&chart].dim()
                    })
                    .map(|(n, _)| n.clone())
                    .map_or_else(|| err(line, format!("declare `tangent` on chart `{chart}` before `sharp {p}`")), Ok)?;
                (MorphismSpec::Sharp { poisson: p.to_string() }, (p.to_string(), tangent))
            }
            ["identity", a] => {
                self.sym().algebroid(line, a)?;
                (MorphismSpec::Identity { algebroid: a.to_string() }, (a.to_string(), a.to_string()))
            }
            ["project", p] => {
                let b = self.sym().simple(line, &self.sym().pullbacks, "pull-back", p)?;
                (MorphismSpec::Project { pullback: p.to_string() }, (p.to_string(), b))
            }
            ["factor", f, "through", p] => {
                let (s, t) = self.sym().morphism(line, f)?;
                let b = self.sym().simple(line, &self.sym().pullbacks, "pull-back", p)?;
                if b != t {
                    return err(line, format!("pull-back `{p}` is not of the target of `{f}`"));
                }
                (MorphismSpec::Factor { morphism: f.to_string(), pullback: p.to_string() }, (s, p.to_string()))
            }
            _ => return err(line, format!("unknown morphism constructor `{rhs}`")),
        };
        self.sc.symbols.morphisms.insert(name.clone(), ends);
        self.push(line, name, DeclKind::Morphism(spec));
        Ok(())
    }

    fn pullback_block(&mut self, line: usize, header: &str, body: &[Line]) -> PResult<()> {
        // pullback P of B on CHART
        let words: Vec<&str> = header.split_whitespace().collect();
        let [name, "of", target, "on", chart_name] = words.as_slice() else {
            return err(line, "expected `pullback NAME of ALG on CHART`");
        };
        let name = self.declare(line, name)?;
        let chart = self.sym().chart(line, chart_name)?.clone();
        let (tc, tf) = self.sym().algebroid(line, target)?;
        let (tdim, tf) = (tc.dim(), tf.to_vec());
        let mut basemap: Option<Vec<ScalarFn>> = if tdim == 0 { Some(vec![]) } else { None };
        let mut pairs = Vec::new();
        let mut product: Option<Vec<usize>> = None;
        for l in body {
            let (kw, rest) = first_word(l.text);
            match kw {
                "basemap" => basemap = Some(parse_list(l.no, &chart, rest, tdim)?),
                "product" => {
                    let coords = rest
                        .split_whitespace()
                        .map(|c| chart.index_of(c).map_or_else(|| err(l.no, format!("unknown coordinate `{c}`")), Ok))
                        .collect::<PResult<Vec<_>>>()?;
                    if coords.len() != tdim {
                        return err(l.no, format!("product needs {tdim} base coordinates"));
                    }
                    product = Some(coords);
                }
                "pair" => {
                    // pair NAME: b = ...; u = ...
                    let (pn, spec) = rest.split_once(':').map_or_else(|| err(l.no, "expected `pair NAME: b = ...; u = ...`"), Ok)?;
                    let mut b = None;
                    let mut u = None;
                    for part in spec.split(';') {
                        let (k, v) = split_eq(l.no, part)?;
                        match k.as_str() {
                            "b" => b = Some(parse_list(l.no, &chart, &v, tf.len())?),
                            "u" => u = Some(parse_list(l.no, &chart, &v, chart.dim())?),
                            _ => return err(l.no, format!("unknown pair field `{k}`")),
                        }
                    }
                    let (Some(b), Some(u)) = (b, u) else {
                        return err(l.no, "pair needs both `b` and `u`");
                    };
                    pairs.push((ident(l.no, pn.trim())?, b, u));
                }
                _ => return err(l.no, format!("unknown pull-back entry `{kw}`")),
            }
        }
        let (frame_names, spec) = match product {
            Some(base_coords) => {
                if !pairs.is_empty() {
                    return err(line, "`product` and `pair` cannot be mixed");
                }
                let mut names = tf.clone();
                names.extend((0..chart.dim()).filter(|k| !base_coords.contains(k)).map(|k| format!("d_{}", chart.coord(k))));
                (names, FrameSpec::Product { base_coords })
            }
            None => {
                let Some(basemap) = basemap else {
                    return err(line, format!("pull-back `{name}` needs a basemap or `product`"));
                };
                (pairs.iter().map(|p| p.0.clone()).collect(), FrameSpec::User { basemap, pairs })
            }
        };
        self.sc.symbols.pullbacks.insert(name.clone(), target.to_string());
        self.add_algebroid(
            line,
            name,
            chart_name.to_string(),
            frame_names,
            AlgebroidSpec::Pullback { target: target.to_string(), frame: spec },
        );
        Ok(())
    }

    fn extension_block(&mut self, line: usize, header: &str, body: &[Line]) -> PResult<()> {
        let name = self.declare(line, header.trim())?;
        let (mut incl, mut proj, mut lambda, mut lifts) = (None, None, LambdaSpec::One, None);
        let mut lift_rows: Vec<(usize, Vec<ScalarFn>)> = Vec::new();
        for l in body {
            let (kw, rest) = first_word(l.text);
            match kw {
                "inclusion" => incl = Some(self.sym().morphism(l.no, rest).map(|e| (rest.to_string(), e))?),
                "projection" => proj = Some(self.sym().morphism(l.no, rest).map(|e| (rest.to_string(), e))?),
                "lambda" => {
                    let words: Vec<&str> = rest.split_whitespace().collect();
                    lambda = match words.as_slice() {
                        ["compatible", sa, sb] => LambdaSpec::Compatible { sa: sa.to_string(), sb: sb.to_string() },
                        _ => {
                            let Some((_, (src, _))) = &proj else {
                                return err(l.no, "`projection` must come before `lambda`");
                            };
                            let (chart, _) = self.sym().algebroid(l.no, src)?;
                            LambdaSpec::Expr(parse_fn(l.no, chart, rest)?)
                        }
                    };
                }
                "lift" => {
                    let Some((_, (a, b))) = &proj else {
                        return err(l.no, "`projection` must come before `lift`");
                    };
                    let (lhs, rhs) = split_eq(l.no, rest)?;
                    let t = self.sym().frame_index(l.no, b, &lhs)?;
                    let (chart, fa) = self.sym().algebroid(l.no, a)?;
                    lift_rows.push((t, parse_list(l.no, chart, &rhs, fa.len())?));
                }
                _ => return err(l.no, format!("unknown extension entry `{kw}`")),
            }
        }
        let (Some((i, (_, a1))), Some((phi, (a2, b)))) = (incl, proj) else {
            return err(line, "extension needs `inclusion` and `projection`");
        };
        if a1 != a2 {
            return err(line, format!("`{i}` ends at `{a1}` but `{phi}` starts at `{a2}`"));
        }
        if let LambdaSpec::Compatible { sa, sb } = &lambda {
            self.sym().sections_for(line, sa, &a1)?;
            self.sym().sections_for(line, sb, &b)?;
        }
        if !lift_rows.is_empty() {
            let (chart, fa) = self.sym().algebroid(line, &a1)?;
            let (_, fb) = self.sym().algebroid(line, &b)?;
            let mut m = vec![vec![ScalarFn::zero(chart.dim()); fb.len()]; fa.len()];
            for (t, col) in lift_rows {
                for (j, f) in col.into_iter().enumerate() {
                    m[j][t] = f;
                }
            }
            lifts = Some(m);
        }
        self.sc.symbols.extensions.insert(name.clone(), (a1, b));
        self.push(line, name, DeclKind::Extension { inclusion: i, projection: phi, lambda, lifts });
        Ok(())
    }

    fn quotient_block(&mut self, line: usize, header: &str, body: &[Line]) -> PResult<()> {
        let words: Vec<&str> = header.split_whitespace().collect();
        let [name, "for", m] = words.as_slice() else {
            return err(line, "expected `quotient NAME for MORPHISM`");
        };
        let name = self.declare(line, name)?;
        let (a, ap) = self.sym().morphism(line, m)?;
        let (chart, fa) = self.sym().algebroid(line, &a)?;
        let (chart, ra) = (chart.clone(), fa.len());
        let rap = self.sym().algebroid(line, &ap)?.1.len();
        let mut data =
            QuotientRepData { image_names: vec![], image: vec![], kernel_names: vec![], kernel: vec![], complement: vec![], lambda: None };
        for l in body {
            let (kw, rest) = first_word(l.text);
            match kw {
                "image" | "kernel" => {
                    let (lhs, rhs) = split_eq(l.no, rest)?;
                    let n = ident(l.no, &lhs)?;
                    if kw == "image" {
                        data.image_names.push(n);
                        data.image.push(parse_list(l.no, &chart, &rhs, rap)?);
                    } else {
                        data.kernel_names.push(n);
                        data.kernel.push(parse_list(l.no, &chart, &rhs, ra)?);
                    }
                }
                "complement" => data.complement.push(parse_list(l.no, &chart, rest.trim_start_matches('=').trim(), rap)?),
                "lambda" => data.lambda = Some(parse_fn(l.no, &chart, rest)?),
                _ => return err(l.no, format!("unknown quotient entry `{kw}`")),
            }
        }
        self.sc.symbols.quotients.insert(name.clone(), m.to_string());
        self.push(line, name, DeclKind::Quotient { morphism: m.to_string(), data });
        Ok(())
    }

    fn diagram_block(&mut self, line: usize, header: &str, body: &[Line]) -> PResult<()> {
        let name = self.declare(line, header.trim())?;
        let (mut objects, mut arrows, mut comps, mut close, mut secs) = (vec![], vec![], vec![], false, vec![]);
        for l in body {
            let (kw, rest) = first_word(l.text);
            match kw {
                "objects" => {
                    for o in rest.split_whitespace() {
                        self.sym().algebroid(l.no, o)?;
                        objects.push(o.to_string());
                    }
                }
                "arrows" => {
                    for a in rest.split_whitespace() {
                        let (s, t) = self.sym().morphism(l.no, a)?;
                        for end in [&s, &t] {
                            if !objects.contains(end) {
                                return err(l.no, format!("`{a}` touches `{end}`, which is not an object of `{name}`"));
                            }
                        }
                        arrows.push(a.to_string());
                    }
                }
                "compose" => {
                    // compose F G = H   (H = G o F)
                    let (lhs, h) = split_eq(l.no, rest)?;
                    let fg: Vec<&str> = lhs.split_whitespace().collect();
                    let [f, g] = fg.as_slice() else {
                        return err(l.no, "expected `compose F G = H`");
                    };
                    for x in [*f, *g, h.as_str()] {
                        if !arrows.iter().any(|a| a == x) {
                            return err(l.no, format!("`{x}` is not an arrow of `{name}`"));
                        }
                    }
                    comps.push((f.to_string(), g.to_string(), h));
                }
                "close" => close = true,
                "sections" => {
                    let (o, s) = split_eq(l.no, rest)?;
                    if !objects.contains(&o) {
                        return err(l.no, format!("`{o}` is not an object of `{name}`"));
                    }
                    self.sym().sections_for(l.no, &s, &o)?;
                    secs.push((o, s));
                }
                _ => return err(l.no, format!("unknown diagram entry `{kw}`")),
            }
        }
        self.sc.symbols.diagrams.insert(name.clone(), objects.clone());
        self.push(line, name, DeclKind::Diagram { objects, arrows, compositions: comps, close, sections: secs });
        Ok(())
    }

    fn form(&mut self, line: usize, rest: &str) -> PResult<()> {
        let (name, rhs) = split_eq(line, rest)?;
        let name = self.declare(line, &name)?;
        let (kw, args) = first_word(&rhs);
        let words: Vec<&str> = args.split_whitespace().collect();
        let (alg, spec) = match kw {
            "modular" => {
                let (a, s) = match words.as_slice() {
                    [a] => (a.to_string(), self.sc.default_sections(a)),
                    [a, s] => (a.to_string(), s.to_string()),
                    _ => return err(line, "expected `modular ALG [SECTIONS]`"),
                };
                self.sym().algebroid(line, &a)?;
                self.sym().sections_for(line, &s, &a)?;
                (a.clone(), FormSpec::Modular { algebroid: a, sections: s })
            }
            "relmod" => {
                let m = words.first().map_or_else(|| err(line, "expected `relmod MORPHISM [SA SB]`"), Ok)?;
                let (s, t) = self.sym().morphism(line, m)?;
                let (sa, sb) = match words.as_slice() {
                    [_] => (self.sc.default_sections(&s), self.sc.default_sections(&t)),
                    [_, a, b] => (a.to_string(), b.to_string()),
                    _ => return err(line, "expected `relmod MORPHISM [SA SB]`"),
                };
                self.sym().sections_for(line, &sa, &s)?;
                self.sym().sections_for(line, &sb, &t)?;
                (s, FormSpec::Relmod { morphism: m.to_string(), sa, sb })
            }
            "char" => {
                let (r, lam) = first_word(args);
                let a = self.sym().simple(line, &self.sym().reps, "rep", r)?;
                let lambda = match lam.strip_prefix("lambda") {
                    Some(e) => Some(parse_fn(line, self.sym().algebroid(line, &a)?.0, e)?),
                    None if lam.is_empty() => None,
                    None => return err(line, "expected `char REP [lambda EXPR]`"),
                };
                (a, FormSpec::Char { rep: r.to_string(), lambda })
            }
            "literal" => {
                let (a, coeffs) = args.split_once(':').map_or_else(|| err(line, "expected `literal ALG: c1, c2, ...`"), Ok)?;
                let a = a.trim().to_string();
                let (chart, frame) = self.sym().algebroid(line, &a)?;
                let coeffs = parse_list(line, chart, coeffs, frame.len())?;
                (a.clone(), FormSpec::Literal { algebroid: a, coeffs })
            }
            "d" => {
                let (a, f) = first_word(args);
                let (chart, _) = self.sym().algebroid(line, a)?;
                let f = parse_fn(line, chart, f)?;
                (a.to_string(), FormSpec::Exact { algebroid: a.to_string(), f })
            }
            "pullback" => {
                let [m, f] = words.as_slice() else {
                    return err(line, "expected `pullback MORPHISM FORM`");
                };
                let (s, t) = self.sym().morphism(line, m)?;
                let fa = self.sym().form(line, f)?;
                if fa != t {
                    return err(line, format!("form `{f}` lives on `{fa}`, not on `{t}`"));
                }
                (s, FormSpec::Pullback { morphism: m.to_string(), form: f.to_string() })
            }
            "sum" | "difference" => {
                let [l, r] = words.as_slice() else {
                    return err(line, format!("expected `{kw} FORM FORM`"));
                };
                let (la, ra) = (self.sym().form(line, l)?, self.sym().form(line, r)?);
                if la != ra {
                    return err(line, format!("forms `{l}` and `{r}` live on different algebroids"));
                }
                let sign = if kw == "sum" { 1 } else { -1 };
                (la, FormSpec::Sum { left: l.to_string(), right: r.to_string(), sign })
            }
            _ => return err(line, format!("unknown form constructor `{kw}`")),
        };
        self.sc.symbols.forms.insert(name.clone(), alg.clone());
        self.push(line, name, DeclKind::Form { algebroid: alg, spec });
        Ok(())
    }

    fn assertion(&mut self, line: usize, rest: &str) -> PResult<()> {
        let mut words: Vec<&str> = rest.split_whitespace().collect();
        let mut options = AssertOptions { expect: Expect::Pass, degree: None, modes: None, probes: vec![] };
        while let Some(last) = words.last() {
            let Some((k, v)) = last.split_once('=') else { break };
            if v.is_empty() {
                break;
            }
            match k {
                "expect" => {
                    options.expect = match v {
                        "pass" => Expect::Pass,
                        "fail" => Expect::Fail,
                        other => Expect::Error(other.to_string()),
                    }
                }
                "degree" => options.degree = Some(v.parse().map_err(|_| ScenarioError { line, message: format!("bad degree `{v}`") })?),
                "modes" => options.modes = Some(v.parse().map_err(|_| ScenarioError { line, message: format!("bad modes `{v}`") })?),
                "probes" => {
                    for p in v.split(',') {
                        self.sym().morphism(line, p)?;
                        options.probes.push(p.to_string());
                    }
                }
                _ => break,
            }
            words.pop();
        }
        let text = words.join(" ");
        let check = self.check(line, &text)?;
        self.sc.assertions.push(Assertion { line, text, check, options });
        Ok(())
    }

    fn secs(&self, line: usize, given: Option<&&str>, alg: &str) -> PResult<String> {
        let s = given.map_or_else(|| self.sc.default_sections(alg), |s| s.to_string());
        self.sym().sections_for(line, &s, alg)?;
        Ok(s)
    }

    fn check(&self, line: usize, text: &str) -> PResult<Check> {
        let (kw, rest) = first_word(text);
        let w: Vec<&str> = rest.split_whitespace().collect();
        let s = self.sym();
        let bad = |usage: &str| err(line, format!("usage: assert {usage}"));
        let check = match kw {
            "axioms" => {
                let [a] = w.as_slice() else { return bad("axioms ALG") };
                s.algebroid(line, a)?;
                Check::Axioms(a.to_string())
            }
            "morphism" => {
                let [m] = w.as_slice() else { return bad("morphism MORPHISM") };
                s.morphism(line, m)?;
                Check::Morphism(m.to_string())
            }
            "flat" => {
                let [r] = w.as_slice() else { return bad("flat REP") };
                s.simple(line, &s.reps, "rep", r)?;
                Check::Flat(r.to_string())
            }
            "equal" => {
                let [a, b] = w.as_slice() else { return bad("equal FORM FORM") };
                if s.form(line, a)? != s.form(line, b)? {
                    return err(line, format!("forms `{a}` and `{b}` live on different algebroids"));
                }
                Check::Equal(a.to_string(), b.to_string())
            }
            "pairing" => {
                // pairing FORM X = EXPR
                let (lhs, rhs) = split_eq(line, rest)?;
                let lw: Vec<&str> = lhs.split_whitespace().collect();
                let [f, x] = lw.as_slice() else { return bad("pairing FORM FRAME = EXPR") };
                let a = s.form(line, f)?;
                let frame = s.frame_index(line, &a, x)?;
                let value = parse_fn(line, s.algebroid(line, &a)?.0, &rhs)?;
                Check::Pairing { form: f.to_string(), frame, value }
            }
            "class" => {
                let [f, v] = w.as_slice() else { return bad("class FORM VERDICT") };
                s.form(line, f)?;
                Check::Class { form: f.to_string(), verdict: verdict_word(line, v)? }
            }
            "cohomologous" => {
                let [a, b, v] = w.as_slice() else { return bad("cohomologous FORM FORM VERDICT") };
                if s.form(line, a)? != s.form(line, b)? {
                    return err(line, format!("forms `{a}` and `{b}` live on different algebroids"));
                }
                Check::Cohomologous { left: a.to_string(), right: b.to_string(), verdict: verdict_word(line, v)? }
            }
            "lie_volume" => {
                // lie_volume ALG X VOL = EXPR
                let (lhs, rhs) = split_eq(line, rest)?;
                let (a, more) = first_word(&lhs);
                let (x, vol) = first_word(more);
                let frame = s.frame_index(line, a, x)?;
                let chart = s.algebroid(line, a)?.0;
                Check::LieVolume {
                    algebroid: a.to_string(),
                    frame,
                    volume: parse_fn(line, chart, vol)?,
                    value: parse_fn(line, chart, &rhs)?,
                }
            }
            "pullback_fn" => {
                let (lhs, rhs) = split_eq(line, rest)?;
                let (m, f) = first_word(&lhs);
                let (src, tgt) = s.morphism(line, m)?;
                Check::PullbackFn {
                    morphism: m.to_string(),
                    f: parse_fn(line, s.algebroid(line, &tgt)?.0, f)?,
                    value: parse_fn(line, s.algebroid(line, &src)?.0, &rhs)?,
                }
            }
            "pullback_d" => {
                let [m] = w.as_slice() else { return bad("pullback_d MORPHISM") };
                s.morphism(line, m)?;
                Check::PullbackD(m.to_string())
            }
            "admissible" => {
                let rank = match w.as_slice() {
                    [_] => None,
                    [_, "rank", r] => Some(r.parse().map_err(|_| ScenarioError { line, message: format!("bad rank `{r}`") })?),
                    _ => return bad("admissible PULLBACK [rank N]"),
                };
                s.simple(line, &s.pullbacks, "pull-back", w[0])?;
                Check::Admissible { pullback: w[0].to_string(), rank }
            }
            "transverse" => {
                let [p] = w.as_slice() else { return bad("transverse PULLBACK") };
                s.simple(line, &s.pullbacks, "pull-back", p)?;
                Check::Transverse(p.to_string())
            }
            "pullback" => {
                let (p, a, proj) = match w.as_slice() {
                    [p, "iso", a] => (p, a, None),
                    [p, "iso", a, "projection", m] => (p, a, Some(m.to_string())),
                    _ => return bad("pullback PULLBACK iso ALG [projection MORPHISM]"),
                };
                s.simple(line, &s.pullbacks, "pull-back", p)?;
                s.algebroid(line, a)?;
                if let Some(m) = &proj {
                    s.morphism(line, m)?;
                }
                Check::PullbackIso { pullback: p.to_string(), algebroid: a.to_string(), projection: proj }
            }
            "ell_phi" => {
                // ell_phi P SECTIONS mu = EXPR
                let (lhs, rhs) = split_eq(line, rest)?;
                let lw: Vec<&str> = lhs.split_whitespace().collect();
                let [p, sec, "mu"] = lw.as_slice() else { return bad("ell_phi PULLBACK SECTIONS mu = EXPR") };
                let b = s.simple(line, &s.pullbacks, "pull-back", p)?;
                self.sym().sections_for(line, sec, &b)?;
                let mu = parse_fn(line, s.algebroid(line, p)?.0, &rhs)?;
                Check::EllPhi { pullback: p.to_string(), sections: sec.to_string(), mu }
            }
            "factor" => {
                let [m, "through", p] = w.as_slice() else { return bad("factor MORPHISM through PULLBACK") };
                s.morphism(line, m)?;
                s.simple(line, &s.pullbacks, "pull-back", p)?;
                Check::Factor { morphism: m.to_string(), pullback: p.to_string() }
            }
            "normal_form" => {
                let [a, "over", c, "base", coords @ ..] = w.as_slice() else {
                    return bad("normal_form ALG over ALG base COORDS...");
                };
                let chart = s.algebroid(line, a)?.0;
                s.algebroid(line, c)?;
                let base_coords = coords
                    .iter()
                    .map(|x| chart.index_of(x).map_or_else(|| err(line, format!("unknown coordinate `{x}`")), Ok))
                    .collect::<PResult<_>>()?;
                Check::NormalForm { algebroid: a.to_string(), over: c.to_string(), base_coords }
            }
            "injective" => {
                let [p, f] = w.as_slice() else { return bad("injective PULLBACK FORM") };
                let b = s.simple(line, &s.pullbacks, "pull-back", p)?;
                if s.form(line, f)? != b {
                    return err(line, format!("form `{f}` does not live on `{b}`"));
                }
                Check::Injective { pullback: p.to_string(), form: f.to_string() }
            }
            "rep_dphi" => {
                let Some(m) = w.first() else { return bad("rep_dphi MORPHISM [SA SB]") };
                let (src, tgt) = s.morphism(line, m)?;
                let sa = self.secs(line, w.get(1), &src)?;
                let sb = self.secs(line, w.get(2), &tgt)?;
                Check::RepDphi { morphism: m.to_string(), sa, sb }
            }
            "pullback_char" => {
                let (head, lam) = match rest.split_once(" lambda ") {
                    Some((h, l)) => (h, Some(l)),
                    None => (rest, None),
                };
                let hw: Vec<&str> = head.split_whitespace().collect();
                let [m, r] = hw.as_slice() else { return bad("pullback_char MORPHISM REP [lambda EXPR]") };
                let (_, tgt) = s.morphism(line, m)?;
                let ra = s.simple(line, &s.reps, "rep", r)?;
                if ra != tgt {
                    return err(line, format!("rep `{r}` is not a representation of `{tgt}`"));
                }
                let lambda = lam.map(|l| parse_fn(line, s.algebroid(line, &tgt)?.0, l)).transpose()?;
                Check::PullbackChar { morphism: m.to_string(), rep: r.to_string(), lambda }
            }
            "rep_projection" => {
                let [m, r] = w.as_slice() else { return bad("rep_projection MORPHISM REP") };
                let (_, tgt) = s.morphism(line, m)?;
                if s.simple(line, &s.reps, "rep", r)? != tgt {
                    return err(line, format!("rep `{r}` is not a representation of `{tgt}`"));
                }
                Check::RepProjection { morphism: m.to_string(), rep: r.to_string() }
            }
            "extension" => {
                let Some(e) = w.first() else { return bad("extension EXT [SA SB]") };
                let (a, b) = s.extensions.get(*e).cloned().map_or_else(|| err(line, format!("unknown extension `{e}`")), Ok)?;
                let sa = self.secs(line, w.get(1), &a)?;
                let sb = self.secs(line, w.get(2), &b)?;
                Check::Extension { extension: e.to_string(), sa, sb }
            }
            "unimodular" => {
                let [e] = w.as_slice() else { return bad("unimodular EXT") };
                if !s.extensions.contains_key(*e) {
                    return err(line, format!("unknown extension `{e}`"));
                }
                Check::Unimodular(e.to_string())
            }
            "constant_rank" => {
                let Some(q) = w.first() else { return bad("constant_rank QUOTIENT [SA]") };
                let m = s.simple(line, &s.quotients, "quotient", q)?;
                let (src, _) = s.morphism(line, &m)?;
                let sa = self.secs(line, w.get(1), &src)?;
                Check::ConstantRank { quotient: q.to_string(), sa }
            }
            "regular_poisson" => {
                let [p, q] = w.as_slice() else { return bad("regular_poisson POISSON QUOTIENT") };
                s.simple(line, &s.poisson, "poisson structure", p)?;
                s.simple(line, &s.quotients, "quotient", q)?;
                Check::RegularPoisson { poisson: p.to_string(), quotient: q.to_string() }
            }
            "diagram" => {
                let (d, c) = match w.as_slice() {
                    [d, "associativity"] => (d, DiagramCheck::Associativity),
                    [d, "coboundary"] => (d, DiagramCheck::Coboundary),
                    [d, "delta_squared"] => (d, DiagramCheck::DeltaSquared),
                    [d, "terminal", p] => (d, DiagramCheck::Terminal(p.to_string())),
                    _ => return bad("diagram DIAGRAM associativity|coboundary|delta_squared|terminal OBJECT"),
                };
                let objs = s.diagrams.get(*d).map_or_else(|| err(line, format!("unknown diagram `{d}`")), Ok)?;
                if let DiagramCheck::Terminal(p) = &c {
                    if !objs.contains(p) {
                        return err(line, format!("`{p}` is not an object of `{d}`"));
                    }
                }
                Check::Diagram { diagram: d.to_string(), check: c }
            }
            "composition" => {
                let (f, g) = match w.as_slice() {
                    [f, g, ..] => (f, g),
                    _ => return bad("composition MORPHISM MORPHISM [SA SB SC]"),
                };
                let (a, b) = s.morphism(line, f)?;
                let (b2, c) = s.morphism(line, g)?;
                if b != b2 {
                    return err(line, format!("`{g}` does not start where `{f}` ends"));
                }
                if !(w.len() == 2 || w.len() == 5) {
                    return bad("composition MORPHISM MORPHISM [SA SB SC]");
                }
                Check::Composition {
                    first: f.to_string(),
                    second: g.to_string(),
                    sa: self.secs(line, w.get(2), &a)?,
                    sb: self.secs(line, w.get(3), &b)?,
                    sc: self.secs(line, w.get(4), &c)?,
                }
            }
            _ => return err(line, format!("unknown assertion `{kw}`")),
        };
        Ok(check)
    }
}

fn verdict_word(line: usize, v: &str) -> PResult<String> {
    match v {
        "exact" | "certified-nonexact" | "unknown-in-ansatz" => Ok(v.to_string()),
        _ => err(line, format!("unknown verdict `{v}` (exact, certified-nonexact, unknown-in-ansatz)")),
    }
}

/// `NAME on CHART`.
fn on_clause(line: usize, s: &str) -> PResult<(String, String)> {
    let w: Vec<&str> = s.split_whitespace().collect();
    match w.as_slice() {
        [n, "on", c] => Ok((n.to_string(), c.to_string())),
        _ => err(line, format!("expected `NAME on CHART`, found `{s}`")),
    }
}
