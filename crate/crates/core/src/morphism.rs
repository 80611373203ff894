//! Bundle maps between presentations, pull-back of forms and representations,
//! relative modular cocycles and the representation whose characteristic
//! cocycle they are.

use num_traits::Zero;

use crate::algebroid::{AlgebroidPresentation, FormField};
use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::representation::{canonical_rep, render_matrix, LineSection, Matrix, Representation, Sections};
use crate::symexpr::{ScalarFn, Trig};

/// A morphism `(Phi, phi)` from `source` (over `M`) to `target` (over `N`):
/// `basemap[j]` is the `j`-th target coordinate of `phi` on `M`, and
/// `fiber[t][i]` is the `t`-th target component of `Phi(e_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Morphism {
    name: String,
    source: AlgebroidPresentation,
    target: AlgebroidPresentation,
    basemap: Vec<ScalarFn>,
    fiber: Matrix,
}

fn check_basemap_periodicity(source: &AlgebroidPresentation, target: &AlgebroidPresentation, basemap: &[ScalarFn]) -> Result<()> {
    let m = source.chart();
    let n = target.chart();
    for (j, phi_j) in basemap.iter().enumerate() {
        let mut rest = phi_j.clone();
        if n.is_periodic(j) {
            // strip integer multiples of periodic source coordinates
            for k in (0..m.dim()).filter(|k| m.is_periodic(*k)) {
                let coeff = phi_j
                    .terms()
                    .find(|(key, _)| {
                        key.trig == Trig::One
                            && key.exp.iter().all(Zero::is_zero)
                            && key.powers.iter().enumerate().all(|(l, p)| *p == u32::from(l == k))
                    })
                    .map(|(_, c)| c.clone());
                if let Some(c) = coeff {
                    if !c.is_integer() {
                        return Err(Error::PeriodicityViolation(format!(
                            "periodic coordinate {} is mapped with non-integer winding",
                            n.coord(j)
                        )));
                    }
                    rest = &rest - &ScalarFn::var(m.dim(), k).scale(&c);
                }
            }
        }
        if !rest.is_periodic_valid(m) {
            return Err(Error::PeriodicityViolation(format!(
                "base map component {} = {} is not single-valued",
                n.coord(j),
                phi_j.display(m)
            )));
        }
    }
    Ok(())
}

impl Morphism {
    pub fn new(
        name: impl Into<String>,
        source: AlgebroidPresentation,
        target: AlgebroidPresentation,
        basemap: Vec<ScalarFn>,
        fiber: Matrix,
    ) -> Result<Self> {
        if basemap.len() != target.dim() || basemap.iter().any(|f| f.dim() != source.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "base map needs {} components on a {}-dimensional chart",
                target.dim(),
                source.dim()
            )));
        }
        if fiber.len() != target.rank() || fiber.iter().any(|row| row.len() != source.rank()) {
            return Err(Error::DimensionMismatch(format!("fiber matrix must be {} x {}", target.rank(), source.rank())));
        }
        if fiber.iter().flatten().any(|f| f.dim() != source.dim()) {
            return Err(Error::DimensionMismatch("fiber entry on another chart".into()));
        }
        check_basemap_periodicity(&source, &target, &basemap)?;
        for f in fiber.iter().flatten() {
            if !f.is_periodic_valid(source.chart()) {
                return Err(Error::PeriodicityViolation(format!("fiber entry {} is not single-valued", f.display(source.chart()))));
            }
        }
        Ok(Self { name: name.into(), source, target, basemap, fiber })
    }

    pub fn identity(a: &AlgebroidPresentation) -> Self {
        let n = a.dim();
        let basemap = (0..n).map(|j| ScalarFn::var(n, j)).collect();
        let fiber = (0..a.rank()).map(|t| (0..a.rank()).map(|i| ScalarFn::int(n, (t == i) as i64)).collect()).collect();
        Self { name: format!("id_{}", a.name()), source: a.clone(), target: a.clone(), basemap, fiber }
    }

    /// The tangent map `(T phi, phi)` between tangent presentations.
    pub fn tangent_map(
        name: impl Into<String>,
        source: &AlgebroidPresentation,
        target: &AlgebroidPresentation,
        basemap: Vec<ScalarFn>,
    ) -> Result<Self> {
        let fiber = basemap.iter().map(|phi| (0..source.dim()).map(|k| phi.partial(k)).collect()).collect();
        Self::new(name, source.clone(), target.clone(), basemap, fiber)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &AlgebroidPresentation {
        &self.source
    }

    pub fn target(&self) -> &AlgebroidPresentation {
        &self.target
    }

    pub fn basemap(&self) -> &[ScalarFn] {
        &self.basemap
    }

    pub fn fiber(&self) -> &Matrix {
        &self.fiber
    }

    pub fn is_base_preserving(&self) -> bool {
        self.source.chart() == self.target.chart()
            && self.basemap.iter().enumerate().all(|(j, f)| *f == ScalarFn::var(self.source.dim(), j))
    }

    /// `f o phi`.
    pub fn pullback_fn(&self, f: &ScalarFn) -> Result<ScalarFn> {
        f.substitute_in(&self.basemap, self.source.dim())
    }

    /// `Phi~^* beta`, multiplicative extension of `eps^t -> sum_i Phi_ti e^i`.
    pub fn pullback_form(&self, beta: &FormField) -> Result<FormField> {
        if beta.rank() != self.target.rank() || beta.dim() != self.target.dim() {
            return Err(Error::DimensionMismatch("form does not live on the target".into()));
        }
        let coframe_images: Vec<FormField> = (0..self.target.rank()).map(|t| self.source.form_from_coeffs(&self.fiber[t])).collect();
        let mut out = FormField::zero(self.source.rank(), self.source.dim(), beta.degree());
        for (idx, c) in beta.terms() {
            let mut term = self.source.function(self.pullback_fn(c)?);
            for t in idx {
                term = term.wedge(&coframe_images[*t]);
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// `Phi(a)` for a source section given by frame coefficients, as a
    /// section of the pulled-back target bundle.
    pub fn apply_section(&self, a: &[ScalarFn]) -> Vec<ScalarFn> {
        let n = self.source.dim();
        self.fiber.iter().map(|row| row.iter().zip(a).fold(ScalarFn::zero(n), |acc, (p, x)| &acc + &(p * x))).collect()
    }

    /// Anchor compatibility and the chain-map condition on coframe generators.
    pub fn check(&self) -> CheckReport {
        let mut rep = CheckReport::new(format!("morphism {}", self.name));
        let (a, b) = (&self.source, &self.target);
        let m = a.dim();
        let rho_b_phi: Vec<Vec<ScalarFn>> = match (0..b.rank())
            .map(|t| b.anchor_row(t).iter().map(|f| self.pullback_fn(f)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
        {
            Ok(v) => v,
            Err(e) => {
                rep.fail(format!("substitution failed: {e}"));
                return rep;
            }
        };
        for i in 0..a.rank() {
            for j in 0..b.dim() {
                let mut lhs = ScalarFn::zero(m);
                for t in 0..b.rank() {
                    lhs = &lhs + &(&self.fiber[t][i] * &rho_b_phi[t][j]);
                }
                let rhs = a.anchor_apply(i, &self.basemap[j]);
                let diff = &lhs - &rhs;
                rep.residual(format!("anchor {} on {}", a.frame()[i], b.chart().coord(j)), a.render_fn(&diff), diff.is_zero());
            }
        }
        for t in 0..b.rank() {
            let lhs = self.pullback_form(&b.d(&b.coframe(t)));
            let rhs = self.pullback_form(&b.coframe(t)).map(|f| a.d(&f));
            match (lhs, rhs) {
                (Ok(l), Ok(r)) => {
                    let diff = l.sub(&r);
                    rep.residual(format!("chain map on e^{}", b.frame()[t]), a.render_form(&diff), diff.is_zero());
                }
                (Err(e), _) | (_, Err(e)) => rep.fail(format!("substitution failed: {e}")),
            }
        }
        rep
    }

    /// `Phi^! D`: `Gamma'_i = sum_t Phi_ti (Gamma_t o phi)` on the pulled-back frame.
    pub fn pullback_rep(&self, d: &Representation) -> Result<Representation> {
        if d.algebroid() != &self.target {
            return Err(Error::DimensionMismatch("representation is not of the target".into()));
        }
        let n = self.source.dim();
        let mdim = d.fiber_rank();
        let subst: Vec<Matrix> = d
            .gammas()
            .iter()
            .map(|g| g.iter().map(|row| row.iter().map(|f| self.pullback_fn(f)).collect()).collect())
            .collect::<Result<_>>()?;
        let gamma: Vec<Matrix> = (0..self.source.rank())
            .map(|i| {
                let mut g = vec![vec![ScalarFn::zero(n); mdim]; mdim];
                for (t, sub) in subst.iter().enumerate() {
                    let p = &self.fiber[t][i];
                    if p.is_zero() {
                        continue;
                    }
                    for (r, row) in g.iter_mut().enumerate() {
                        for (s, v) in row.iter_mut().enumerate() {
                            if !sub[r][s].is_zero() {
                                *v = &*v + &(p * &sub[r][s]);
                            }
                        }
                    }
                }
                g
            })
            .collect();
        let out = Representation::new(format!("{}^!{}", self.name, d.name()), self.source.clone(), d.fiber().to_vec(), gamma)?;
        let flat = out.check_flat();
        if !flat.passed() {
            return Err(Error::NotFlat(flat.to_string()));
        }
        Ok(out)
    }

    /// `Mod A - Phi~^*(Mod B)` for the given trivializing sections.
    pub fn relative_modular(&self, sa: &Sections, sb: &Sections) -> Result<FormField> {
        let mod_a = sa.modular(&self.source)?;
        let mod_b = sb.modular(&self.target)?;
        let out = mod_a.sub(&self.pullback_form(&mod_b)?);
        let d = self.source.d(&out);
        if !d.is_zero() {
            return Err(Error::NotClosed(self.source.render_form(&d)));
        }
        Ok(out)
    }

    /// `D^Phi = D^A (x) Phi^!((D^B)^*)` on `L^A (x) phi^!((L^B)^*)` in the
    /// standard frames, with the section matching `sa` and `sb`.
    pub fn rep_dphi(&self, sa: &Sections, sb: &Sections) -> Result<(Representation, LineSection)> {
        let da = canonical_rep(&self.source)?;
        let db_dual = canonical_rep(&self.target)?.dual();
        let pulled = self.pullback_rep(&db_dual)?;
        let rep = da.tensor(&pulled)?.with_name(format!("D^{}", self.name));
        let lb = sb.line_section()?;
        let lb_inv_pulled = self.pullback_fn(&lb.inverse()?.coeff().clone())?;
        let section = LineSection::unit(&sa.line_section()?.coeff().clone() * &lb_inv_pulled)?;
        Ok((rep, section))
    }

    /// `Psi o Phi` where `self = Phi: A -> B` and `psi: B -> C`.
    pub fn compose(&self, psi: &Morphism) -> Result<Morphism> {
        if psi.source != self.target {
            return Err(Error::DimensionMismatch(format!("cannot compose {} after {}", psi.name, self.name)));
        }
        let basemap = psi.basemap.iter().map(|f| self.pullback_fn(f)).collect::<Result<Vec<_>>>()?;
        let n = self.source.dim();
        let psi_sub: Matrix = psi.fiber.iter().map(|row| row.iter().map(|f| self.pullback_fn(f)).collect()).collect::<Result<_>>()?;
        let fiber = (0..psi.target.rank())
            .map(|u| {
                (0..self.source.rank())
                    .map(|i| (0..self.target.rank()).fold(ScalarFn::zero(n), |acc, t| &acc + &(&psi_sub[u][t] * &self.fiber[t][i])))
                    .collect()
            })
            .collect();
        Morphism::new(format!("{} o {}", psi.name, self.name), self.source.clone(), psi.target.clone(), basemap, fiber)
    }

    /// Whether two morphisms have identical data.
    pub fn same_data(&self, other: &Morphism) -> bool {
        self.source == other.source && self.target == other.target && self.basemap == other.basemap && self.fiber == other.fiber
    }
}

/// `Mod(Psi o Phi) = Mod Phi + Phi~^*(Mod Psi)` at cochain level.
pub fn check_composition_law(phi: &Morphism, psi: &Morphism, sa: &Sections, sb: &Sections, sc: &Sections) -> Result<CheckReport> {
    let comp = phi.compose(psi)?;
    let mut rep = CheckReport::new(format!("composition law for {} and {}", phi.name, psi.name));
    rep.absorb("composite: ", comp.check());
    let lhs = comp.relative_modular(sa, sc)?;
    let rhs = phi.relative_modular(sa, sb)?.add(&phi.pullback_form(&psi.relative_modular(sb, sc)?)?);
    let diff = lhs.sub(&rhs);
    rep.residual("Mod(Psi o Phi) - Mod Phi - Phi*(Mod Psi)", phi.source.render_form(&diff), diff.is_zero());
    Ok(rep)
}

/// Commutativity of the square relating `d_{B,F*}` and `d_{A,E*}` through
/// `Phi~^* (x) Psi~^*`, checked on the dual frame of `F`. `psi[u][s]` is the
/// `u`-th `F` component of the image of `eps_s`.
pub fn check_rep_morphism(psi: &Matrix, da: &Representation, db: &Representation, phi: &Morphism) -> Result<CheckReport> {
    let a = phi.source();
    if da.algebroid() != a || db.algebroid() != phi.target() {
        return Err(Error::DimensionMismatch("representations do not match the morphism".into()));
    }
    let (me, mf) = (da.fiber_rank(), db.fiber_rank());
    if psi.len() != mf || psi.iter().any(|r| r.len() != me) {
        return Err(Error::DimensionMismatch(format!("bundle map must be {mf} x {me}")));
    }
    let n = a.dim();
    let e_dual = da.dual();
    let f_dual = db.dual();
    // Psi~^* f^u = sum_s psi[u][s] eps^s
    let psi_star = |u: usize| -> Vec<FormField> { (0..me).map(|s| a.function(psi[u][s].clone())).collect() };
    let mut rep = CheckReport::new(format!("representation morphism over {}", phi.name()));
    let b = phi.target();
    for u in 0..mf {
        let lhs = e_dual.d_ae_unchecked(&psi_star(u));
        // d_{B,F*} f^u = sum_j sum_v (Gamma*_j)_{vu} e^j (x) f^v, then pulled back
        let mut rhs: Vec<FormField> = vec![FormField::zero(a.rank(), n, 1); me];
        for j in 0..b.rank() {
            let ej = phi.pullback_form(&b.coframe(j))?;
            for v in 0..mf {
                let g = phi.pullback_fn(&f_dual.gamma(j)[v][u])?;
                if g.is_zero() {
                    continue;
                }
                for (s, slot) in rhs.iter_mut().enumerate() {
                    let c = &g * &psi[v][s];
                    if !c.is_zero() {
                        *slot = slot.add(&ej.scale(&c));
                    }
                }
            }
        }
        for s in 0..me {
            let diff = lhs[s].sub(&rhs[s]);
            rep.residual(format!("square on {}* component {}*", db.fiber()[u], da.fiber()[s]), a.render_form(&diff), diff.is_zero());
        }
    }
    rep.note(format!("bundle map {}", render_matrix(a, psi)));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::modular_cocycle;
    use crate::symexpr::Chart;

    fn cylinder() -> (Chart, AlgebroidPresentation) {
        let c = Chart::new("N", &[("theta", true), ("x", false)]).unwrap();
        let b = AlgebroidPresentation::new("B", c.clone(), vec!["X".into()], vec![vec![ScalarFn::one(2), c.parse("x").unwrap()]]).unwrap();
        (c, b)
    }

    fn circle() -> (Chart, AlgebroidPresentation) {
        let c = Chart::new("M", &[("theta", true)]).unwrap();
        let t = AlgebroidPresentation::tangent(&c);
        (c, t)
    }

    fn inclusion() -> Morphism {
        let (m, tm) = circle();
        let (_, b) = cylinder();
        Morphism::new("incl", tm, b, vec![m.parse("theta").unwrap(), ScalarFn::zero(1)], vec![vec![ScalarFn::one(1)]]).unwrap()
    }

    fn cylinder_sections() -> Sections {
        Sections::new(ScalarFn::one(2), ScalarFn::int(2, -1))
    }

    #[test]
    fn inclusion_is_a_morphism() {
        let phi = inclusion();
        assert!(phi.check().passed());
        let beta = phi.target().coframe(0);
        assert_eq!(phi.pullback_form(&beta).unwrap(), phi.source().coframe(0));
    }

    #[test]
    fn relative_modular_of_inclusion() {
        let phi = inclusion();
        let rel = phi.relative_modular(&Sections::standard(1), &cylinder_sections()).unwrap();
        assert_eq!(rel, phi.source().coframe(0).neg());
        let (rep, sec) = phi.rep_dphi(&Sections::standard(1), &cylinder_sections()).unwrap();
        assert_eq!(rep.char_cocycle(&sec).unwrap(), rel);
    }

    #[test]
    fn corrupted_fiber_fails() {
        let phi = inclusion();
        let bad = Morphism::new("bad", phi.source().clone(), phi.target().clone(), phi.basemap().to_vec(), vec![vec![ScalarFn::int(1, 2)]])
            .unwrap();
        assert!(!bad.check().passed());
    }

    #[test]
    fn periodicity_enforced() {
        let (m, tm) = circle();
        let r = Chart::new("R", &[("x", false)]).unwrap();
        let tr = AlgebroidPresentation::tangent(&r);
        let bad = Morphism::tangent_map("bad", &tm, &tr, vec![m.parse("theta").unwrap()]);
        assert!(matches!(bad, Err(Error::PeriodicityViolation(_))));
        let half = Morphism::tangent_map("half", &tm, &tm, vec![m.parse("theta/2").unwrap()]);
        assert!(matches!(half, Err(Error::PeriodicityViolation(_))));
        let twice = Morphism::tangent_map("twice", &tm, &tm, vec![m.parse("2*theta").unwrap()]);
        assert!(twice.unwrap().check().passed());
    }

    #[test]
    fn pullback_commutes_with_differential_on_functions() {
        let phi = inclusion();
        let (c, b) = cylinder();
        let h = c.parse("x^2 + cos(theta)").unwrap();
        let lhs = phi.pullback_form(&b.d(&b.function(h.clone()))).unwrap();
        let rhs = phi.source().d(&phi.source().function(phi.pullback_fn(&h).unwrap()));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn composition_with_tangent_inclusion() {
        let phi = inclusion();
        let (c, b) = cylinder();
        let tn = AlgebroidPresentation::tangent(&c);
        let anchor = Morphism::new(
            "rho",
            b.clone(),
            tn,
            vec![c.parse("theta").unwrap(), c.parse("x").unwrap()],
            vec![vec![ScalarFn::one(2)], vec![c.parse("x").unwrap()]],
        )
        .unwrap();
        assert!(anchor.check().passed());
        let rep = check_composition_law(&phi, &anchor, &Sections::standard(1), &cylinder_sections(), &Sections::standard(2)).unwrap();
        assert!(rep.passed(), "{rep}");
        let comp = phi.compose(&anchor).unwrap();
        let mod_tn = modular_cocycle(
            anchor.target(),
            &anchor.target().top_multivector(ScalarFn::one(2)),
            &crate::algebroid::VolumeForm::standard(2),
        )
        .unwrap();
        assert!(mod_tn.is_zero());
        assert!(comp.relative_modular(&Sections::standard(1), &Sections::standard(2)).unwrap().is_zero());
    }

    #[test]
    fn canonical_projection_is_rep_morphism() {
        let phi = inclusion();
        let (c, b) = cylinder();
        let d = Representation::new(
            "D",
            b.clone(),
            vec!["f1".into(), "f2".into()],
            vec![vec![vec![c.parse("x").unwrap(), c.parse("sin(theta)").unwrap()], vec![ScalarFn::zero(2), ScalarFn::one(2)]]],
        )
        .unwrap();
        let pulled = phi.pullback_rep(&d).unwrap();
        let id: Matrix = vec![vec![ScalarFn::one(1), ScalarFn::zero(1)], vec![ScalarFn::zero(1), ScalarFn::one(1)]];
        assert!(check_rep_morphism(&id, &pulled, &d, &phi).unwrap().passed());
        let flip: Matrix = vec![vec![ScalarFn::int(1, -1), ScalarFn::zero(1)], vec![ScalarFn::zero(1), ScalarFn::one(1)]];
        assert!(!check_rep_morphism(&flip, &pulled, &d, &phi).unwrap().passed());
    }
}
