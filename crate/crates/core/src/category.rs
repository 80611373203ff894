//! Finite diagrams of algebroids with cochains valued in degree-one cocycles.

use std::collections::BTreeMap;

use crate::algebroid::{AlgebroidPresentation, FormField};
use crate::cohomology::{cohomologous, AnsatzSpace, Verdict};
use crate::error::{Error, Result};
use crate::morphism::Morphism;
use crate::report::CheckReport;
use crate::representation::Sections;

/// Object name to cocycle on that object.
pub type Cochain0 = BTreeMap<String, FormField>;
/// Arrow name to cocycle on the arrow's source.
pub type Cochain1 = BTreeMap<String, FormField>;

#[derive(Debug, Clone)]
pub struct Arrow {
    pub name: String,
    pub source: String,
    pub target: String,
    pub morphism: Morphism,
}

/// Objects, verified arrows (identities included) and a composition table
/// `(phi, psi) -> psi o phi`.
#[derive(Debug, Clone, Default)]
pub struct Diagram {
    objects: Vec<(String, AlgebroidPresentation)>,
    arrows: Vec<Arrow>,
    compositions: BTreeMap<(String, String), String>,
}

impl Diagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn objects(&self) -> &[(String, AlgebroidPresentation)] {
        &self.objects
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn compositions(&self) -> &BTreeMap<(String, String), String> {
        &self.compositions
    }

    pub fn object(&self, name: &str) -> Option<&AlgebroidPresentation> {
        self.objects.iter().find(|(n, _)| n == name).map(|(_, a)| a)
    }

    pub fn arrow(&self, name: &str) -> Option<&Arrow> {
        self.arrows.iter().find(|a| a.name == name)
    }

    fn object_of(&self, a: &AlgebroidPresentation) -> Option<String> {
        self.objects.iter().find(|(_, o)| o == a).map(|(n, _)| n.clone())
    }

    /// Adds an object together with its identity arrow `id_<name>`.
    pub fn add_object(&mut self, name: impl Into<String>, a: AlgebroidPresentation) -> Result<()> {
        let name = name.into();
        if self.object(&name).is_some() {
            return Err(Error::PreconditionFailure(format!("object {name} declared twice")));
        }
        self.objects.push((name.clone(), a.clone()));
        let id = format!("id_{name}");
        self.arrows.push(Arrow { name: id.clone(), source: name.clone(), target: name, morphism: Morphism::identity(&a).with_name(id) });
        Ok(())
    }

    /// Adds a verified arrow between declared objects, with its compositions
    /// with identities.
    pub fn add_arrow(&mut self, morphism: Morphism) -> Result<()> {
        let name = morphism.name().to_string();
        if self.arrow(&name).is_some() {
            return Err(Error::PreconditionFailure(format!("arrow {name} declared twice")));
        }
        let source =
            self.object_of(morphism.source()).ok_or_else(|| Error::PreconditionFailure(format!("source of {name} is not an object")))?;
        let target =
            self.object_of(morphism.target()).ok_or_else(|| Error::PreconditionFailure(format!("target of {name} is not an object")))?;
        let rep = morphism.check();
        if !rep.passed() {
            return Err(Error::NotAMorphism(format!("{rep}")));
        }
        self.compositions.insert((format!("id_{source}"), name.clone()), name.clone());
        self.compositions.insert((name.clone(), format!("id_{target}")), name.clone());
        self.arrows.push(Arrow { name, source, target, morphism });
        Ok(())
    }

    /// Declares `psi o phi = comp`, verifying that the data agree.
    pub fn declare_composition(&mut self, phi: &str, psi: &str, comp: &str) -> Result<()> {
        let get = |n: &str| self.arrow(n).ok_or_else(|| Error::PreconditionFailure(format!("unknown arrow {n}")));
        let (f, g, h) = (get(phi)?, get(psi)?, get(comp)?);
        if f.target != g.source {
            return Err(Error::PreconditionFailure(format!("{psi} o {phi} is not composable")));
        }
        let composed = f.morphism.compose(&g.morphism)?;
        if composed.basemap() != h.morphism.basemap() || composed.fiber() != h.morphism.fiber() {
            return Err(Error::PreconditionFailure(format!("{psi} o {phi} does not match {comp}")));
        }
        self.compositions.insert((phi.to_string(), psi.to_string()), comp.to_string());
        Ok(())
    }

    /// Declares every composite of two arrows that coincides with an arrow.
    pub fn close_compositions(&mut self) -> Result<usize> {
        let mut found = Vec::new();
        for f in &self.arrows {
            for g in self.arrows.iter().filter(|g| g.source == f.target) {
                if self.compositions.contains_key(&(f.name.clone(), g.name.clone())) {
                    continue;
                }
                let c = f.morphism.compose(&g.morphism)?;
                if let Some(h) = self.arrows.iter().find(|h| {
                    h.source == f.source && h.target == g.target && h.morphism.basemap() == c.basemap() && h.morphism.fiber() == c.fiber()
                }) {
                    found.push(((f.name.clone(), g.name.clone()), h.name.clone()));
                }
            }
        }
        let count = found.len();
        self.compositions.extend(found);
        Ok(count)
    }

    /// Associativity on declared triples.
    pub fn check_associativity(&self) -> CheckReport {
        let mut rep = CheckReport::new("associativity of the composition table");
        for ((f, g), u) in &self.compositions {
            for ((g2, h), v) in &self.compositions {
                if g2 != g {
                    continue;
                }
                let left = self.compositions.get(&(u.clone(), h.clone()));
                let right = self.compositions.get(&(f.clone(), v.clone()));
                if let (Some(l), Some(r)) = (left, right) {
                    let ok = l == r
                        || self
                            .arrow(l)
                            .zip(self.arrow(r))
                            .is_some_and(|(x, y)| x.morphism.basemap() == y.morphism.basemap() && x.morphism.fiber() == y.morphism.fiber());
                    rep.residual(format!("{h} o ({g} o {f}) vs ({h} o {g}) o {f}"), if ok { "0" } else { "differs" }, ok);
                }
            }
        }
        rep
    }
}

fn closed(a: &AlgebroidPresentation, alpha: &FormField, what: &str) -> Result<()> {
    let d = a.d(alpha);
    if !d.is_zero() {
        return Err(Error::NotClosed(format!("{what}: {}", a.render_form(&d))));
    }
    Ok(())
}

/// `(delta u)(Phi) = u(source) - Phi^*(u(target))`.
pub fn delta0(diagram: &Diagram, u: &Cochain0) -> Result<Cochain1> {
    for (name, a) in diagram.objects() {
        let v = u.get(name).ok_or_else(|| Error::PreconditionFailure(format!("cochain has no value on {name}")))?;
        closed(a, v, name)?;
    }
    diagram
        .arrows()
        .iter()
        .map(|ar| {
            let pulled = ar.morphism.pullback_form(&u[&ar.target])?;
            Ok((ar.name.clone(), u[&ar.source].sub(&pulled)))
        })
        .collect()
}

/// `(delta v)(Phi, Psi) = v(Phi) - v(Psi o Phi) + Phi^*(v(Psi))`.
pub fn delta1_pair(diagram: &Diagram, v: &Cochain1, phi: &str, psi: &str) -> Result<FormField> {
    let comp = diagram
        .compositions()
        .get(&(phi.to_string(), psi.to_string()))
        .ok_or_else(|| Error::MissingComposition(format!("{psi} o {phi}")))?;
    let get = |n: &str| v.get(n).ok_or_else(|| Error::PreconditionFailure(format!("cochain has no value on {n}")));
    let f = diagram.arrow(phi).expect("declared arrow");
    Ok(get(phi)?.sub(get(comp)?).add(&f.morphism.pullback_form(get(psi)?)?))
}

/// `delta v` on every declared composable pair.
pub fn delta1(diagram: &Diagram, v: &Cochain1) -> Result<Vec<((String, String), FormField)>> {
    for ar in diagram.arrows() {
        let val = v.get(&ar.name).ok_or_else(|| Error::PreconditionFailure(format!("cochain has no value on {}", ar.name)))?;
        closed(ar.morphism.source(), val, &ar.name)?;
    }
    diagram.compositions().keys().map(|(phi, psi)| Ok(((phi.clone(), psi.clone()), delta1_pair(diagram, v, phi, psi)?))).collect()
}

/// Modular cocycles of every object for the given sections.
pub fn mod_cochain(diagram: &Diagram, sections: &BTreeMap<String, Sections>) -> Result<Cochain0> {
    diagram
        .objects()
        .iter()
        .map(|(name, a)| {
            let s = sections.get(name).cloned().unwrap_or_else(|| Sections::standard(a.dim()));
            Ok((name.clone(), s.modular(a)?))
        })
        .collect()
}

/// `delta(Mod)` equals the relative modular cocycle on every arrow, and is a
/// cocycle; with `alt` sections, the relative modular cocycles for `alt` are
/// compared with `delta(Mod)` as classes.
pub fn verify_mod_coboundary(
    diagram: &Diagram,
    sections: &BTreeMap<String, Sections>,
    alt: Option<&BTreeMap<String, Sections>>,
    space_for: &dyn Fn(&AlgebroidPresentation) -> AnsatzSpace,
    seed: u64,
) -> Result<CheckReport> {
    let mut rep = CheckReport::new("relative modular cocycles as the coboundary of Mod");
    let u = mod_cochain(diagram, sections)?;
    let du = delta0(diagram, &u)?;
    let sec = |name: &str, a: &AlgebroidPresentation, table: &BTreeMap<String, Sections>| {
        table.get(name).cloned().unwrap_or_else(|| Sections::standard(a.dim()))
    };
    for ar in diagram.arrows() {
        let (sa, sb) = (sec(&ar.source, ar.morphism.source(), sections), sec(&ar.target, ar.morphism.target(), sections));
        let rel = ar.morphism.relative_modular(&sa, &sb)?;
        let diff = du[&ar.name].sub(&rel);
        let a = ar.morphism.source();
        rep.note(format!("delta(Mod)({}) = {}", ar.name, a.render_form(&du[&ar.name])));
        rep.residual(format!("delta(Mod)({}) - Mod {}", ar.name, ar.name), a.render_form(&diff), diff.is_zero());
        if let Some(alt) = alt {
            let rel_alt = ar.morphism.relative_modular(&sec(&ar.source, a, alt), &sec(&ar.target, ar.morphism.target(), alt))?;
            let v = cohomologous(a, &du[&ar.name], &rel_alt, &space_for(a), &[], seed)?;
            let ok = matches!(v, Verdict::Exact(_));
            rep.residual(format!("class of delta(Mod)({}) under changed sections", ar.name), v.label(), ok);
        }
    }
    for ((phi, psi), val) in delta1(diagram, &du)? {
        let a = diagram.arrow(&phi).expect("declared").morphism.source();
        rep.residual(format!("delta delta(Mod)({phi}, {psi})"), a.render_form(&val), val.is_zero());
    }
    Ok(rep)
}

/// For a terminal object `point` with arrows `p_A` from every object, a
/// 1-cocycle `v` is the coboundary of `u(A) = v(p_A)`.
pub fn coboundary_from_terminal(diagram: &Diagram, v: &Cochain1, point: &str) -> Result<(Cochain0, CheckReport)> {
    let mut rep = CheckReport::new(format!("cocycle as a coboundary through {point}"));
    for ((phi, psi), val) in delta1(diagram, v)? {
        let a = diagram.arrow(&phi).expect("declared").morphism.source();
        rep.residual(format!("(delta v)({phi}, {psi})"), a.render_form(&val), val.is_zero());
    }
    let mut u = Cochain0::new();
    for (name, _) in diagram.objects() {
        let p = diagram
            .arrows()
            .iter()
            .find(|ar| &ar.source == name && ar.target == point)
            .ok_or_else(|| Error::PreconditionFailure(format!("no arrow from {name} to {point}")))?;
        u.insert(name.clone(), v[&p.name].clone());
    }
    let du = delta0(diagram, &u)?;
    for ar in diagram.arrows() {
        let diff = du[&ar.name].sub(&v[&ar.name]);
        rep.residual(format!("(delta u)({}) - v({})", ar.name, ar.name), ar.morphism.source().render_form(&diff), diff.is_zero());
    }
    Ok((u, rep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{Chart, ScalarFn};

    fn cylinder_diagram() -> Diagram {
        let n = Chart::new("N", &[("theta", true), ("x", false)]).unwrap();
        let m = Chart::new("S1", &[("theta", true)]).unwrap();
        let b = AlgebroidPresentation::new("B", n.clone(), vec!["X".into()], vec![vec![ScalarFn::one(2), n.parse("x").unwrap()]]).unwrap();
        let ts1 = AlgebroidPresentation::tangent(&m);
        let tn = AlgebroidPresentation::tangent(&n);
        let incl =
            Morphism::new("incl", ts1.clone(), b.clone(), vec![m.parse("theta").unwrap(), ScalarFn::zero(1)], vec![vec![ScalarFn::one(1)]])
                .unwrap();
        let id2 = vec![ScalarFn::var(2, 0), ScalarFn::var(2, 1)];
        let rho = Morphism::new("rho", b.clone(), tn.clone(), id2, vec![vec![ScalarFn::one(2)], vec![n.parse("x").unwrap()]]).unwrap();
        let comp = incl.compose(&rho).unwrap().with_name("rho_incl");
        let mut d = Diagram::new();
        d.add_object("TS1", ts1).unwrap();
        d.add_object("B", b).unwrap();
        d.add_object("TN", tn).unwrap();
        d.add_arrow(incl).unwrap();
        d.add_arrow(rho).unwrap();
        d.add_arrow(comp).unwrap();
        d.declare_composition("incl", "rho", "rho_incl").unwrap();
        d
    }

    #[test]
    fn mod_is_coboundary_on_cylinder() {
        let d = cylinder_diagram();
        assert!(d.check_associativity().passed());
        let sections = BTreeMap::new();
        let rep = verify_mod_coboundary(&d, &sections, None, &|a| AnsatzSpace::new(a.chart(), 2, 2), 0).unwrap();
        assert!(rep.passed(), "{rep}");
        let du = delta0(&d, &mod_cochain(&d, &sections).unwrap()).unwrap();
        let ts1 = d.object("TS1").unwrap();
        assert_eq!(du["incl"], ts1.form_from_coeffs(&[ScalarFn::int(1, -1)]));
    }

    #[test]
    fn missing_composition_reported() {
        let d = cylinder_diagram();
        let u = mod_cochain(&d, &BTreeMap::new()).unwrap();
        let v = delta0(&d, &u).unwrap();
        assert!(matches!(delta1_pair(&d, &v, "rho", "incl"), Err(Error::MissingComposition(_))));
    }

    #[test]
    fn terminal_point_coboundary() {
        let mut d = cylinder_diagram();
        let pt = Chart::new("pt", &[]).unwrap();
        let p = AlgebroidPresentation::zero(&pt).with_name("pt");
        d.add_object("pt", p.clone()).unwrap();
        for name in ["TS1", "B", "TN"] {
            let a = d.object(name).unwrap().clone();
            let m = Morphism::new(format!("p_{name}"), a.clone(), p.clone(), vec![], vec![]).unwrap();
            d.add_arrow(m).unwrap();
        }
        d.close_compositions().unwrap();
        let u = mod_cochain(&d, &BTreeMap::new()).unwrap();
        let v = delta0(&d, &u).unwrap();
        let (_, rep) = coboundary_from_terminal(&d, &v, "pt").unwrap();
        assert!(rep.passed(), "{rep}");
    }
}
