//! Materialization of scenario declarations into core objects.

use std::collections::BTreeMap;

use modclass_core::category::Diagram;
use modclass_core::extension::{cotangent_algebroid, ExtensionPresentation, QuotientRepData};
use modclass_core::pullback::{build_pullback, factorize, FramePair, Pullback, PullbackFrame};
use modclass_core::representation::Sections;
use modclass_core::{AlgebroidPresentation, Chart, FormField, LineSection, Morphism, Multivector, Representation, ScalarFn};

use crate::scenario::{AlgebroidSpec, Decl, DeclKind, FormSpec, FrameSpec, LambdaSpec, MorphismSpec, Scenario};

/// Why an object is unavailable: its own construction failed, or it depends
/// on one that did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unavailable(pub String);

type EResult<T> = Result<T, Unavailable>;

fn core<T>(r: modclass_core::Result<T>) -> EResult<T> {
    r.map_err(|e| Unavailable(format!("{e}")))
}

#[derive(Debug, Clone, Default)]
pub struct Env {
    pub charts: BTreeMap<String, Chart>,
    pub algebroids: BTreeMap<String, AlgebroidPresentation>,
    pub poisson: BTreeMap<String, (Chart, Multivector)>,
    pub pullback_frames: BTreeMap<String, (String, PullbackFrame)>,
    pub pullbacks: BTreeMap<String, Pullback>,
    pub reps: BTreeMap<String, Representation>,
    pub morphisms: BTreeMap<String, Morphism>,
    pub sections: BTreeMap<String, Sections>,
    pub extensions: BTreeMap<String, ExtensionPresentation>,
    pub quotients: BTreeMap<String, (String, QuotientRepData)>,
    pub diagrams: BTreeMap<String, (Diagram, BTreeMap<String, Sections>)>,
    pub forms: BTreeMap<String, (String, FormField)>,
    /// Declarations that could not be built, in order: (line, name, reason).
    pub failures: Vec<(usize, String, String)>,
}

fn get<'a, T>(table: &'a BTreeMap<String, T>, failures: &[(usize, String, String)], kind: &str, name: &str) -> EResult<&'a T> {
    table.get(name).ok_or_else(|| match failures.iter().find(|(_, n, _)| n == name) {
        Some((line, _, why)) => Unavailable(format!("`{name}` (line {line}) is unavailable: {why}")),
        None => Unavailable(format!("no {kind} named `{name}`")),
    })
}

impl Env {
    pub fn build(sc: &Scenario, seed: u64) -> Self {
        let mut env = Env::default();
        for (k, d) in sc.decls.iter().enumerate() {
            if let Err(Unavailable(why)) = env.declare(sc, d, seed.wrapping_add(k as u64)) {
                env.failures.push((d.line, d.name.clone(), why));
            }
        }
        env
    }

    pub fn algebroid(&self, n: &str) -> EResult<&AlgebroidPresentation> {
        get(&self.algebroids, &self.failures, "algebroid", n)
    }

    pub fn morphism(&self, n: &str) -> EResult<&Morphism> {
        get(&self.morphisms, &self.failures, "morphism", n)
    }

    pub fn rep(&self, n: &str) -> EResult<&Representation> {
        get(&self.reps, &self.failures, "representation", n)
    }

    pub fn pullback(&self, n: &str) -> EResult<&Pullback> {
        get(&self.pullbacks, &self.failures, "pull-back", n)
    }

    pub fn pullback_frame(&self, n: &str) -> EResult<&(String, PullbackFrame)> {
        get(&self.pullback_frames, &self.failures, "pull-back", n)
    }

    pub fn extension(&self, n: &str) -> EResult<&ExtensionPresentation> {
        get(&self.extensions, &self.failures, "extension", n)
    }

    pub fn quotient(&self, n: &str) -> EResult<&(String, QuotientRepData)> {
        get(&self.quotients, &self.failures, "quotient", n)
    }

    pub fn diagram(&self, n: &str) -> EResult<&(Diagram, BTreeMap<String, Sections>)> {
        get(&self.diagrams, &self.failures, "diagram", n)
    }

    pub fn form(&self, n: &str) -> EResult<&(String, FormField)> {
        get(&self.forms, &self.failures, "form", n)
    }

    pub fn poisson(&self, n: &str) -> EResult<&(Chart, Multivector)> {
        get(&self.poisson, &self.failures, "Poisson structure", n)
    }

    /// Named sections for an algebroid; `standard` is `1 (x) 1`.
    pub fn sections(&self, name: &str, alg: &str) -> EResult<Sections> {
        if name == "standard" {
            return Ok(Sections::standard(self.algebroid(alg)?.dim()));
        }
        get(&self.sections, &self.failures, "sections", name).cloned()
    }

    fn declare(&mut self, sc: &Scenario, d: &Decl, seed: u64) -> EResult<()> {
        let name = d.name.clone();
        match &d.kind {
            DeclKind::Chart(c) => {
                self.charts.insert(name, c.clone());
            }
            DeclKind::Algebroid { chart, spec } => {
                let chart = self.charts[chart].clone();
                let a = match spec {
                    AlgebroidSpec::Tangent => AlgebroidPresentation::tangent(&chart).with_name(&name),
                    AlgebroidSpec::Zero => AlgebroidPresentation::zero(&chart).with_name(&name),
                    AlgebroidSpec::Explicit { frame, anchor, brackets } => {
                        let mut a = core(AlgebroidPresentation::new(&name, chart, frame.clone(), anchor.clone()))?;
                        for (i, j, c) in brackets {
                            core(a.set_bracket(*i, *j, c.clone()))?;
                        }
                        a
                    }
                    AlgebroidSpec::Poisson { pi } => {
                        self.poisson.insert(name.clone(), (chart.clone(), pi.clone()));
                        core(cotangent_algebroid(&chart, pi))?.with_name(&name)
                    }
                    AlgebroidSpec::Pullback { target, frame } => {
                        let b = self.algebroid(target)?.clone();
                        let frame = match frame {
                            FrameSpec::Product { base_coords } => core(PullbackFrame::product(&b, &chart, base_coords.clone()))?,
                            FrameSpec::User { basemap, pairs } => PullbackFrame::user(
                                &chart,
                                basemap.clone(),
                                pairs.iter().map(|(n, b, u)| FramePair { name: n.clone(), b: b.clone(), u: u.clone() }).collect(),
                            ),
                        };
                        self.pullback_frames.insert(name.clone(), (target.clone(), frame.clone()));
                        let pb = core(build_pullback(&name, &b, frame, seed))?;
                        let a = pb.algebroid.clone();
                        self.pullbacks.insert(name.clone(), pb);
                        a
                    }
                };
                self.algebroids.insert(name, a);
            }
            DeclKind::Rep { algebroid, fiber, gammas } => {
                let a = self.algebroid(algebroid)?.clone();
                let (n, m) = (a.dim(), fiber.len());
                let gammas = gammas.iter().map(|g| g.clone().unwrap_or_else(|| vec![vec![ScalarFn::zero(n); m]; m])).collect();
                let r = core(Representation::new(&name, a, fiber.clone(), gammas))?;
                self.reps.insert(name, r);
            }
            DeclKind::RepOp { left, right } => {
                let l = self.rep(left)?;
                let r = match right {
                    Some(r) => core(l.tensor(self.rep(r)?))?,
                    None => l.dual(),
                };
                self.reps.insert(name.clone(), r.with_name(&name));
            }
            DeclKind::Morphism(spec) => {
                let m = self.morphism_from(sc, &name, spec)?;
                self.morphisms.insert(name, m);
            }
            DeclKind::Sections { algebroid, top, volume } => {
                self.algebroid(algebroid)?;
                self.sections.insert(name, Sections::new(top.clone(), volume.clone()));
            }
            DeclKind::Extension { inclusion, projection, lambda, lifts } => {
                let i = self.morphism(inclusion)?.clone();
                let phi = self.morphism(projection)?.clone();
                let n = phi.source().dim();
                let one = LineSection::one(n);
                let mut ext = core(ExtensionPresentation::new(&name, i, phi, one, seed))?;
                if let Some(l) = lifts {
                    ext = ext.with_lifts(l.clone());
                }
                ext.lambda = match lambda {
                    LambdaSpec::One => LineSection::one(n),
                    LambdaSpec::Expr(f) => core(LineSection::asserted(f.clone(), ext.a.chart(), seed))?,
                    LambdaSpec::Compatible { sa, sb } => {
                        let sa = self.sections(sa, ext.a.name())?;
                        let sb = self.sections(sb, ext.b.name())?;
                        core(ext.compatible_lambda(&sa, &sb))?
                    }
                };
                self.extensions.insert(name, ext);
            }
            DeclKind::Quotient { morphism, data } => {
                self.morphism(morphism)?;
                self.quotients.insert(name, (morphism.clone(), data.clone()));
            }
            DeclKind::Diagram { objects, arrows, compositions, close, sections } => {
                let mut dg = Diagram::new();
                for o in objects {
                    core(dg.add_object(o, self.algebroid(o)?.clone()))?;
                }
                for a in arrows {
                    core(dg.add_arrow(self.morphism(a)?.clone()))?;
                }
                for (f, g, h) in compositions {
                    core(dg.declare_composition(f, g, h))?;
                }
                if *close {
                    core(dg.close_compositions())?;
                }
                let mut table = BTreeMap::new();
                for (o, s) in sections {
                    table.insert(o.clone(), self.sections(s, o)?);
                }
                self.diagrams.insert(name, (dg, table));
            }
            DeclKind::Form { algebroid, spec } => {
                let f = self.form_from(spec, seed)?;
                self.forms.insert(name, (algebroid.clone(), f));
            }
        }
        Ok(())
    }

    fn morphism_from(&self, sc: &Scenario, name: &str, spec: &MorphismSpec) -> EResult<Morphism> {
        Ok(match spec {
            MorphismSpec::Explicit { source, target, basemap, fiber } => {
                core(Morphism::new(name, self.algebroid(source)?.clone(), self.algebroid(target)?.clone(), basemap.clone(), fiber.clone()))?
            }
            MorphismSpec::Tangent { source, target, basemap } => {
                core(Morphism::tangent_map(name, self.algebroid(source)?, self.algebroid(target)?, basemap.clone()))?
            }
            MorphismSpec::Compose { first, second } => core(self.morphism(first)?.compose(self.morphism(second)?))?.with_name(name),
            MorphismSpec::Sharp { poisson } => {
                let cot = self.algebroid(poisson)?;
                let sharp = core(modclass_core::extension::sharp_morphism(cot))?;
                let (_, tangent) = sc.morphism_ends(name).expect("resolved at parse time");
                let tm = self.algebroid(tangent)?.clone();
                core(Morphism::new(name, cot.clone(), tm, sharp.basemap().to_vec(), sharp.fiber().clone()))?
            }
            MorphismSpec::Identity { algebroid } => Morphism::identity(self.algebroid(algebroid)?).with_name(name),
            MorphismSpec::Project { pullback } => self.pullback(pullback)?.projection.clone().with_name(name),
            MorphismSpec::Factor { morphism, pullback } => {
                let (m, _) = core(factorize(self.morphism(morphism)?, self.pullback(pullback)?))?;
                m.with_name(name)
            }
        })
    }

    fn form_from(&self, spec: &FormSpec, seed: u64) -> EResult<FormField> {
        Ok(match spec {
            FormSpec::Modular { algebroid, sections } => {
                let a = self.algebroid(algebroid)?;
                core(self.sections(sections, algebroid)?.modular(a))?
            }
            FormSpec::Relmod { morphism, sa, sb } => {
                let m = self.morphism(morphism)?;
                let sa = self.sections(sa, m.source().name())?;
                let sb = self.sections(sb, m.target().name())?;
                core(m.relative_modular(&sa, &sb))?
            }
            FormSpec::Char { rep, lambda } => {
                let r = self.rep(rep)?;
                let lam = match lambda {
                    Some(f) => core(LineSection::asserted(f.clone(), r.algebroid().chart(), seed))?,
                    None => LineSection::one(r.algebroid().dim()),
                };
                core(r.char_cocycle(&lam))?
            }
            FormSpec::Literal { algebroid, coeffs } => self.algebroid(algebroid)?.form_from_coeffs(coeffs),
            FormSpec::Exact { algebroid, f } => {
                let a = self.algebroid(algebroid)?;
                a.d(&a.function(f.clone()))
            }
            FormSpec::Pullback { morphism, form } => core(self.morphism(morphism)?.pullback_form(&self.form(form)?.1))?,
            FormSpec::Sum { left, right, sign } => {
                let (l, r) = (&self.form(left)?.1, &self.form(right)?.1);
                if *sign > 0 {
                    l.add(r)
                } else {
                    l.sub(r)
                }
            }
        })
    }
}
