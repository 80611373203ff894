//! Pull-back algebroids along admissible maps.
//!
//! The pull-back of `B -> N` along `phi: M -> N` has fibers
//! `{(b, u) | rho_B b = T phi u}`. It is presented on a frame of such pairs,
//! either generated from a product structure `M = N x F` or supplied by the
//! caller and verified.

use crate::algebroid::{sort_sign, AlgebroidPresentation};
use crate::error::{Error, Result};
use crate::linalg::{minor_rank, rank_at, solve_unit_pivot, FnMatrix};
use crate::morphism::Morphism;
use crate::report::CheckReport;
use crate::representation::{modular_cocycle, Sections};
use crate::sampling::Sampler;
use crate::symexpr::{Chart, ScalarFn};

/// Number of random points used by rank checks, on top of a small lattice.
pub const RANK_SAMPLES: usize = 50;

/// A frame element `(b, u)` of the pull-back: `b` has target-frame
/// coefficients (functions on `M`), `u` is a vector field on `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub name: String,
    pub b: Vec<ScalarFn>,
    pub u: Vec<ScalarFn>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameMode {
    /// `M = N x F` with `base_coords[j]` the `M` index of the `j`-th `N` coordinate.
    ProductSubmersion {
        base_coords: Vec<usize>,
    },
    UserSupplied,
}

/// Frame data for a pull-back of `target` along `basemap: M -> N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackFrame {
    pub chart: Chart,
    pub basemap: Vec<ScalarFn>,
    pub pairs: Vec<FramePair>,
    pub mode: FrameMode,
}

/// Result of a sampled (and possibly symbolically certified) rank check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankCheck {
    pub samples: usize,
    pub exact_samples: usize,
    pub min_rank: usize,
    pub max_rank: usize,
    pub generic_rank: Option<usize>,
    /// A maximal nonvanishing minor is a unit, so the rank is the same at every point.
    pub certified: bool,
}

impl RankCheck {
    pub fn constant(&self) -> bool {
        self.min_rank == self.max_rank && self.generic_rank.is_none_or(|g| g == self.max_rank)
    }

    pub fn method(&self) -> String {
        if self.certified {
            "exact: a maximal minor is a unit".to_string()
        } else {
            format!("probabilistic: {} random points ({} evaluated exactly)", self.samples, self.exact_samples)
        }
    }
}

/// Points with coordinates in {-1, 0, 1}, at most 27 of them, origin first.
fn lattice_points(dim: usize) -> Vec<Vec<crate::Q>> {
    let mut out = vec![vec![crate::Q::from_integer(0.into()); dim]];
    let count = 3usize.pow(dim.min(3) as u32);
    for n in 1..count {
        let mut p = vec![crate::Q::from_integer(0.into()); dim];
        let mut r = n;
        for slot in p.iter_mut().take(dim.min(3)) {
            *slot = crate::Q::from_integer(((r % 3) as i64 - 1).into());
            r /= 3;
        }
        out.push(p);
    }
    out
}

pub(crate) fn rank_check(m: &FnMatrix, dim: usize, seed: u64) -> RankCheck {
    let mut sampler = Sampler::new(seed);
    let mut min_rank = usize::MAX;
    let mut max_rank = 0;
    let mut exact_samples = 0;
    let mut points = lattice_points(dim);
    points.extend(sampler.points(dim, RANK_SAMPLES));
    let samples = points.len();
    for p in points {
        let (r, exact) = rank_at(m, &p);
        min_rank = min_rank.min(r);
        max_rank = max_rank.max(r);
        exact_samples += exact as usize;
    }
    if m.is_empty() || m[0].is_empty() {
        min_rank = 0;
    }
    let minors = minor_rank(m, dim);
    RankCheck {
        samples,
        exact_samples,
        min_rank,
        max_rank,
        generic_rank: minors.as_ref().map(|r| r.generic_rank),
        certified: minors.is_some_and(|r| r.unit_minor),
    }
}

fn jacobian(basemap: &[ScalarFn], dim_m: usize) -> FnMatrix {
    basemap.iter().map(|phi| (0..dim_m).map(|k| phi.partial(k)).collect()).collect()
}

fn anchor_along(b: &AlgebroidPresentation, basemap: &[ScalarFn], dim_m: usize) -> Result<FnMatrix> {
    // (rho_B o phi) as an n_N x rank_B matrix
    (0..b.dim()).map(|j| (0..b.rank()).map(|t| b.anchor_row(t)[j].substitute_in(basemap, dim_m)).collect()).collect()
}

/// Constant-rank test of the constraint `rho_B b - T phi u = 0`.
/// Returns the check and the resulting pull-back rank.
pub fn check_admissible(b: &AlgebroidPresentation, chart_m: &Chart, basemap: &[ScalarFn], seed: u64) -> Result<(RankCheck, usize)> {
    let rho = anchor_along(b, basemap, chart_m.dim())?;
    let jac = jacobian(basemap, chart_m.dim());
    let c: FnMatrix = (0..b.dim())
        .map(|j| {
            let mut row = rho[j].clone();
            row.extend(jac[j].iter().map(|f| -f));
            row
        })
        .collect();
    let check = rank_check(&c, chart_m.dim(), seed);
    let rank = b.rank() + chart_m.dim() - check.max_rank;
    Ok((check, rank))
}

/// Whether `T phi (TM) + rho_B(B)` spans `TN` at every sampled point.
pub fn check_transverse(b: &AlgebroidPresentation, chart_m: &Chart, basemap: &[ScalarFn], seed: u64) -> Result<(RankCheck, bool)> {
    let rho = anchor_along(b, basemap, chart_m.dim())?;
    let jac = jacobian(basemap, chart_m.dim());
    let c: FnMatrix = (0..b.dim())
        .map(|j| {
            let mut row = jac[j].clone();
            row.extend(rho[j].iter().cloned());
            row
        })
        .collect();
    let check = rank_check(&c, chart_m.dim(), seed);
    let transverse = check.min_rank == b.dim();
    Ok((check, transverse))
}

impl PullbackFrame {
    /// Automatic frame for a product submersion `M = N x F -> N`: lifts
    /// `(e_t, horizontal rho_B e_t)` named after the target frame, then the
    /// vertical fields `d_<coord>` in chart order.
    pub fn product(b: &AlgebroidPresentation, chart_m: &Chart, base_coords: Vec<usize>) -> Result<Self> {
        let n = b.chart();
        let dim_m = chart_m.dim();
        if base_coords.len() != n.dim() {
            return Err(Error::DimensionMismatch(format!("need one base coordinate per coordinate of {}", n.name())));
        }
        let mut seen = vec![false; dim_m];
        for (j, k) in base_coords.iter().enumerate() {
            if *k >= dim_m || seen[*k] {
                return Err(Error::InvalidChart("base coordinates must be distinct coordinates of M".into()));
            }
            seen[*k] = true;
            if chart_m.is_periodic(*k) != n.is_periodic(j) {
                return Err(Error::PeriodicityViolation(format!(
                    "coordinate {} of {} and {} of {} differ in periodicity",
                    chart_m.coord(*k),
                    chart_m.name(),
                    n.coord(j),
                    n.name()
                )));
            }
        }
        let basemap: Vec<ScalarFn> = base_coords.iter().map(|k| ScalarFn::var(dim_m, *k)).collect();
        let rho = anchor_along(b, &basemap, dim_m)?;
        let mut pairs = Vec::new();
        for t in 0..b.rank() {
            let mut u = vec![ScalarFn::zero(dim_m); dim_m];
            for (j, k) in base_coords.iter().enumerate() {
                u[*k] = rho[j][t].clone();
            }
            let bt = (0..b.rank()).map(|s| ScalarFn::int(dim_m, (s == t) as i64)).collect();
            pairs.push(FramePair { name: b.frame()[t].clone(), b: bt, u });
        }
        for k in (0..dim_m).filter(|k| !seen[*k]) {
            let u = (0..dim_m).map(|l| ScalarFn::int(dim_m, (l == k) as i64)).collect();
            pairs.push(FramePair { name: format!("d_{}", chart_m.coord(k)), b: vec![ScalarFn::zero(dim_m); b.rank()], u });
        }
        Ok(Self { chart: chart_m.clone(), basemap, pairs, mode: FrameMode::ProductSubmersion { base_coords } })
    }

    pub fn user(chart_m: &Chart, basemap: Vec<ScalarFn>, pairs: Vec<FramePair>) -> Self {
        Self { chart: chart_m.clone(), basemap, pairs, mode: FrameMode::UserSupplied }
    }

    /// Columns are frame pairs stacked as `(b; u)`.
    fn matrix(&self, rank_b: usize) -> FnMatrix {
        let dim_m = self.chart.dim();
        (0..rank_b + dim_m)
            .map(|row| self.pairs.iter().map(|p| if row < rank_b { p.b[row].clone() } else { p.u[row - rank_b].clone() }).collect())
            .collect()
    }
}

/// A built pull-back: the presentation over `M`, its frame, and the
/// projection onto the first component.
#[derive(Debug, Clone)]
pub struct Pullback {
    pub algebroid: AlgebroidPresentation,
    pub projection: Morphism,
    pub frame: PullbackFrame,
    pub admissibility: RankCheck,
}

impl Pullback {
    /// Expresses `(b, u)` columns in the pull-back frame.
    pub fn expand(&self, columns: &FnMatrix) -> Result<FnMatrix> {
        solve_unit_pivot(&self.frame.matrix(self.projection.target().rank()), columns, self.frame.chart.dim())
    }
}

/// Builds the pull-back presentation of `b` on the given frame.
pub fn build_pullback(name: &str, b: &AlgebroidPresentation, frame: PullbackFrame, seed: u64) -> Result<Pullback> {
    let chart_m = frame.chart.clone();
    let dim_m = chart_m.dim();
    let rank_b = b.rank();
    if frame.basemap.len() != b.dim() {
        return Err(Error::DimensionMismatch("base map has the wrong number of components".into()));
    }
    for p in &frame.pairs {
        if p.b.len() != rank_b || p.u.len() != dim_m {
            return Err(Error::DimensionMismatch(format!("frame pair {} has wrong length", p.name)));
        }
    }
    let (adm, rank) = check_admissible(b, &chart_m, &frame.basemap, seed)?;
    if !adm.constant() {
        return Err(Error::AdmissibilityFailure(format!(
            "constraint rank varies between {} and {} ({})",
            adm.min_rank,
            adm.max_rank,
            adm.method()
        )));
    }
    // each pair satisfies rho_B b = T phi u exactly
    let rho = anchor_along(b, &frame.basemap, dim_m)?;
    let jac = jacobian(&frame.basemap, dim_m);
    for p in &frame.pairs {
        for j in 0..b.dim() {
            let lhs = (0..rank_b).fold(ScalarFn::zero(dim_m), |acc, t| &acc + &(&rho[j][t] * &p.b[t]));
            let rhs = (0..dim_m).fold(ScalarFn::zero(dim_m), |acc, k| &acc + &(&jac[j][k] * &p.u[k]));
            if lhs != rhs {
                return Err(Error::FrameSolveFailure(format!(
                    "pair {} violates the anchor constraint in {}: residual {}",
                    p.name,
                    b.chart().coord(j),
                    (&lhs - &rhs).display(&chart_m)
                )));
            }
        }
    }
    if frame.pairs.len() != rank {
        return Err(Error::FrameSolveFailure(format!("frame has {} pairs but the pull-back has rank {rank}", frame.pairs.len())));
    }
    let fm = frame.matrix(rank_b);
    let indep = rank_check(&fm, dim_m, seed ^ 0x5eed);
    if indep.min_rank != rank {
        return Err(Error::FrameSolveFailure(format!(
            "frame pairs are not independent at every sampled point (rank {} < {rank})",
            indep.min_rank
        )));
    }
    let names: Vec<String> = frame.pairs.iter().map(|p| p.name.clone()).collect();
    let anchor: Vec<Vec<ScalarFn>> = frame.pairs.iter().map(|p| p.u.clone()).collect();
    let mut pb = AlgebroidPresentation::new(name, chart_m.clone(), names, anchor)?;
    let c_phi: Vec<Vec<Vec<ScalarFn>>> = (0..rank_b)
        .map(|s| {
            (0..rank_b)
                .map(|t| b.bracket_coeffs(s, t).iter().map(|f| f.substitute_in(&frame.basemap, dim_m)).collect())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let k = frame.pairs.len();
    let mut pairs_idx = Vec::new();
    let mut columns: Vec<Vec<ScalarFn>> = Vec::new();
    for p in 0..k {
        for q in p + 1..k {
            let (x, y) = (&frame.pairs[p], &frame.pairs[q]);
            let mut first = vec![ScalarFn::zero(dim_m); rank_b];
            for s in 0..rank_b {
                for t in 0..rank_b {
                    let f = &x.b[s] * &y.b[t];
                    if f.is_zero() {
                        continue;
                    }
                    for (kk, slot) in first.iter_mut().enumerate() {
                        if !c_phi[s][t][kk].is_zero() {
                            *slot = &*slot + &(&f * &c_phi[s][t][kk]);
                        }
                    }
                }
            }
            for (kk, slot) in first.iter_mut().enumerate() {
                let a = AlgebroidPresentation::apply_vector_field(&x.u, &y.b[kk]);
                let bb = AlgebroidPresentation::apply_vector_field(&y.u, &x.b[kk]);
                *slot = &(&*slot + &a) - &bb;
            }
            let second = crate::algebroid::vector_field_bracket(&x.u, &y.u);
            let mut col = first;
            col.extend(second);
            columns.push(col);
            pairs_idx.push((p, q));
        }
    }
    if !columns.is_empty() {
        let rhs: FnMatrix = (0..rank_b + dim_m).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect();
        let sol = solve_unit_pivot(&fm, &rhs, dim_m)?;
        for (col, (p, q)) in pairs_idx.iter().enumerate() {
            pb.set_bracket(*p, *q, (0..k).map(|r| sol[r][col].clone()).collect())?;
        }
    }
    let fiber: FnMatrix = (0..rank_b).map(|t| frame.pairs.iter().map(|p| p.b[t].clone()).collect()).collect();
    let projection = Morphism::new(format!("{name}.proj"), pb.clone(), b.clone(), frame.basemap.clone(), fiber)?;
    Ok(Pullback { algebroid: pb, projection, frame, admissibility: adm })
}

/// `Phi = proj o Phi'` with `Phi'(a) = (Phi(a), rho_A(a))` over the identity.
pub fn factorize(phi: &Morphism, pb: &Pullback) -> Result<(Morphism, CheckReport)> {
    let a = phi.source();
    if pb.projection.target() != phi.target() || pb.frame.basemap != phi.basemap() {
        return Err(Error::PreconditionFailure("pull-back must be taken along the morphism's base map".into()));
    }
    if pb.algebroid.chart() != a.chart() {
        return Err(Error::PreconditionFailure("pull-back lives on another chart".into()));
    }
    let rank_b = phi.target().rank();
    let columns: FnMatrix = (0..rank_b + a.dim())
        .map(|row| {
            (0..a.rank()).map(|i| if row < rank_b { phi.fiber()[row][i].clone() } else { a.anchor_row(i)[row - rank_b].clone() }).collect()
        })
        .collect();
    let fiber = pb.expand(&columns)?;
    let basemap = (0..a.dim()).map(|j| ScalarFn::var(a.dim(), j)).collect();
    let phi_prime = Morphism::new(format!("{}'", phi.name()), a.clone(), pb.algebroid.clone(), basemap, fiber)?;
    let mut rep = CheckReport::new(format!("factorization of {}", phi.name()));
    rep.absorb("Phi': ", phi_prime.check());
    let comp = phi_prime.compose(&pb.projection)?;
    let same_basemap = comp.basemap() == phi.basemap();
    rep.residual("base map of proj o Phi' vs phi", if same_basemap { "0" } else { "differs" }, same_basemap);
    for t in 0..rank_b {
        for i in 0..a.rank() {
            let diff = &comp.fiber()[t][i] - &phi.fiber()[t][i];
            rep.residual(format!("(proj o Phi' - Phi)[{}][{}]", phi.target().frame()[t], a.frame()[i]), a.render_fn(&diff), diff.is_zero());
        }
    }
    Ok((phi_prime, rep))
}

/// Cochain-level check that the modular cocycle of a product-submersion
/// pull-back for `omega (x) mu`, with `omega = (sigma o phi) t * top frame`
/// and `iota_tau mu = phi^* nu`, equals the pull-back of the modular cocycle
/// of `B` for `sigma (x) nu`.
pub fn verify_ell_phi(pb: &Pullback, sigma: &ScalarFn, nu: &ScalarFn, mu: &ScalarFn) -> Result<CheckReport> {
    let FrameMode::ProductSubmersion { base_coords } = &pb.frame.mode else {
        return Err(Error::PreconditionFailure("product-submersion frame required".into()));
    };
    let b = pb.projection.target();
    let m = &pb.frame.chart;
    let dim_m = m.dim();
    let fiber_coords: Vec<usize> = (0..dim_m).filter(|k| !base_coords.contains(k)).collect();
    let rest: Vec<usize> = {
        let mut r = base_coords.clone();
        r.sort_unstable();
        r
    };
    // iota_{d_f1 ^ .. ^ d_fk}(dx_1 ^ .. ^ dx_m) = s1 * dx_rest
    let mut perm: Vec<usize> = fiber_coords.clone();
    perm.extend(rest.iter().copied());
    let s1 = sort_sign(&mut perm).expect("distinct coordinates");
    // phi^*(dy_1 ^ .. ^ dy_n) = s2 * dx_rest
    let mut bc = base_coords.clone();
    let s2 = sort_sign(&mut bc).expect("distinct coordinates");
    let mu_inv = mu.unit_inverse().ok_or_else(|| Error::NotAUnit(format!("volume coefficient {}", mu.display(m))))?;
    let nu_phi = pb.projection.pullback_fn(nu)?;
    let t = (&nu_phi * &mu_inv).scale(&crate::symexpr::q(s1 * s2));
    let sigma_phi = pb.projection.pullback_fn(sigma)?;
    let omega = pb.algebroid.top_multivector(&sigma_phi * &t);
    let gamma = modular_cocycle(&pb.algebroid, &omega, &crate::algebroid::VolumeForm::new(mu.clone()))?;
    let beta = Sections::new(sigma.clone(), nu.clone()).modular(b)?;
    let pulled = pb.projection.pullback_form(&beta)?;
    let diff = gamma.sub(&pulled);
    let mut rep = CheckReport::new(format!("l^phi cochain identity for {}", pb.algebroid.name()));
    rep.note(format!("tau coefficient {}", t.display(m)));
    rep.note(format!("gamma = {}", pb.algebroid.render_form(&gamma)));
    rep.note(format!("beta = {}", b.render_form(&beta)));
    rep.residual("gamma - Phi*beta", pb.algebroid.render_form(&diff), diff.is_zero());
    Ok(rep)
}

/// Base-preserving morphism matching frame elements by name; verified and
/// reported. Both presentations must live on the same chart.
pub fn isomorphism_by_names(a: &AlgebroidPresentation, b: &AlgebroidPresentation) -> Result<(Morphism, CheckReport)> {
    if a.chart() != b.chart() {
        return Err(Error::PreconditionFailure("isomorphism check needs a common chart".into()));
    }
    if a.rank() != b.rank() {
        return Err(Error::PreconditionFailure(format!("ranks differ: {} vs {}", a.rank(), b.rank())));
    }
    let n = a.dim();
    let mut fiber = vec![vec![ScalarFn::zero(n); a.rank()]; b.rank()];
    for (i, name) in a.frame().iter().enumerate() {
        let t = b.frame_index(name).ok_or_else(|| Error::PreconditionFailure(format!("frame element {name} missing in {}", b.name())))?;
        fiber[t][i] = ScalarFn::one(n);
    }
    let basemap = (0..n).map(|j| ScalarFn::var(n, j)).collect();
    let phi = Morphism::new(format!("{} ~ {}", a.name(), b.name()), a.clone(), b.clone(), basemap, fiber)?;
    let rep = phi.check();
    Ok((phi, rep))
}

/// Checks a normal-form presentation `b` (frame `d_<x_i>` and `beta_a`)
/// against `psi^! c` for the projection onto the coordinates `base_coords`
/// of `b`'s chart, where `c` carries the `beta_a` frame.
pub fn verify_normal_form(
    b: &AlgebroidPresentation,
    c: &AlgebroidPresentation,
    base_coords: Vec<usize>,
    seed: u64,
) -> Result<(Pullback, CheckReport)> {
    let frame = PullbackFrame::product(c, b.chart(), base_coords)?;
    let pb = build_pullback(&format!("psi^!{}", c.name()), c, frame, seed)?;
    let mut rep = CheckReport::new(format!("{} in normal form over {}", b.name(), c.name()));
    rep.absorb("", b.check_axioms());
    let (_, iso) = isomorphism_by_names(b, &pb.algebroid)?;
    rep.absorb("", iso);
    Ok((pb, rep))
}

/// The algebroid of derivations of the trivial rank-`m` bundle over a chart:
/// frame `d_<coord>` (flat lifts) and `E<a><b>` (endomorphisms `eps_b -> eps_a`).
pub fn derivation_algebroid(chart: &Chart, m: usize) -> Result<AlgebroidPresentation> {
    let n = chart.dim();
    let mut frame: Vec<String> = chart.coords().iter().map(|c| format!("d_{c}")).collect();
    for a in 0..m {
        for b in 0..m {
            frame.push(format!("E{}{}", a + 1, b + 1));
        }
    }
    let r = frame.len();
    let anchor = (0..r).map(|i| (0..n).map(|j| ScalarFn::int(n, (i == j) as i64)).collect()).collect();
    let mut d = AlgebroidPresentation::new(format!("D{}", chart.name()), chart.clone(), frame, anchor)?;
    let idx = |a: usize, b: usize| n + a * m + b;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for e in 0..m {
                    if idx(a, b) >= idx(c, e) {
                        continue;
                    }
                    // [E_ab, E_ce] = delta_bc E_ae - delta_ea E_cb
                    let mut coeffs = vec![ScalarFn::zero(n); r];
                    if b == c {
                        coeffs[idx(a, e)] = &coeffs[idx(a, e)] + &ScalarFn::one(n);
                    }
                    if e == a {
                        coeffs[idx(c, b)] = &coeffs[idx(c, b)] - &ScalarFn::one(n);
                    }
                    d.set_bracket(idx(a, b), idx(c, e), coeffs)?;
                }
            }
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::q;

    fn cylinder() -> (Chart, AlgebroidPresentation) {
        let c = Chart::new("N", &[("theta", true), ("x", false)]).unwrap();
        let b = AlgebroidPresentation::new("B", c.clone(), vec!["X".into()], vec![vec![ScalarFn::one(2), c.parse("x").unwrap()]]).unwrap();
        (c, b)
    }

    #[test]
    fn orbit_inclusion_gives_tangent_circle() {
        let (_, b) = cylinder();
        let m = Chart::new("M", &[("theta", true)]).unwrap();
        let basemap = vec![m.parse("theta").unwrap(), ScalarFn::zero(1)];
        let (adm, rank) = check_admissible(&b, &m, &basemap, 1).unwrap();
        assert!(adm.constant() && adm.certified);
        assert_eq!(rank, 1);
        let (_, transverse) = check_transverse(&b, &m, &basemap, 1).unwrap();
        assert!(!transverse);
        let frame = PullbackFrame::user(
            &m,
            basemap,
            vec![FramePair { name: "d_theta".into(), b: vec![ScalarFn::one(1)], u: vec![ScalarFn::one(1)] }],
        );
        let pb = build_pullback("P", &b, frame, 1).unwrap();
        let tm = AlgebroidPresentation::tangent(&m);
        let (_, iso) = isomorphism_by_names(&pb.algebroid, &tm).unwrap();
        assert!(iso.passed());
        assert!(pb.projection.check().passed());
    }

    #[test]
    fn identity_pullback_reproduces_target() {
        let (c, b) = cylinder();
        let frame = PullbackFrame::product(&b, &c, vec![0, 1]).unwrap();
        let pb = build_pullback("P", &b, frame, 2).unwrap();
        assert_eq!(pb.algebroid.clone().with_name("B"), b);
    }

    #[test]
    fn lie_algebra_pullback() {
        let g = AlgebroidPresentation::lie_algebra("aff1", vec!["e1".into(), "e2".into()], &[(0, 1, vec![q(0), q(1)])]).unwrap();
        let m = Chart::new("M", &[("x", false), ("y", false)]).unwrap();
        let frame = PullbackFrame::product(&g, &m, vec![]).unwrap();
        let pb = build_pullback("P", &g, frame, 3).unwrap();
        assert_eq!(pb.algebroid.frame(), ["e1", "e2", "d_x", "d_y"]);
        assert_eq!(pb.algebroid.bracket_coeffs(0, 1)[1], ScalarFn::one(2));
        assert!(pb.algebroid.bracket_coeffs(0, 2).iter().all(ScalarFn::is_zero));
        assert!(pb.algebroid.check_axioms().passed());
    }

    #[test]
    fn ell_phi_for_cylinder_times_line() {
        let (_, b) = cylinder();
        let m = Chart::new("M", &[("theta", true), ("x", false), ("z", false)]).unwrap();
        let frame = PullbackFrame::product(&b, &m, vec![0, 1]).unwrap();
        let pb = build_pullback("P", &b, frame, 4).unwrap();
        assert!(pb.algebroid.check_axioms().passed());
        assert!(pb.projection.check().passed());
        let rep = verify_ell_phi(&pb, &ScalarFn::one(2), &ScalarFn::int(2, -1), &ScalarFn::one(3)).unwrap();
        assert!(rep.passed(), "{rep}");
        let rel = pb.projection.relative_modular(&Sections::standard(3), &Sections::new(ScalarFn::one(2), ScalarFn::int(2, -1))).unwrap();
        assert!(rel.is_zero());
    }

    #[test]
    fn derivation_algebroids_match() {
        let n = Chart::new("N", &[("y", false)]).unwrap();
        let m = Chart::new("M", &[("y", false), ("z", false)]).unwrap();
        let df = derivation_algebroid(&n, 2).unwrap();
        assert!(df.check_axioms().passed());
        let frame = PullbackFrame::product(&df, &m, vec![0]).unwrap();
        let pb = build_pullback("P", &df, frame, 5).unwrap();
        let dpf = derivation_algebroid(&m, 2).unwrap();
        let (_, rep) = isomorphism_by_names(&pb.algebroid, &dpf).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn normal_form_over_a_foliated_base() {
        // C over (y): beta with anchor y d_y; B over (x, y) with d_x, beta
        let w = Chart::new("W", &[("y", false)]).unwrap();
        let c = AlgebroidPresentation::new("C", w.clone(), vec!["beta".into()], vec![vec![w.parse("y").unwrap()]]).unwrap();
        let n = Chart::new("N", &[("x", false), ("y", false)]).unwrap();
        let b = AlgebroidPresentation::new(
            "B",
            n.clone(),
            vec!["d_x".into(), "beta".into()],
            vec![vec![ScalarFn::one(2), ScalarFn::zero(2)], vec![ScalarFn::zero(2), n.parse("y").unwrap()]],
        )
        .unwrap();
        let (pb, rep) = verify_normal_form(&b, &c, vec![1], 3).unwrap();
        assert!(rep.passed(), "{rep}");
        let ell = verify_ell_phi(&pb, &ScalarFn::one(1), &ScalarFn::one(1), &ScalarFn::one(2)).unwrap();
        assert!(ell.passed(), "{ell}");
        // a mixed bracket [beta, d_x] = beta breaks the normal form
        let mut bad = b.clone();
        bad.set_bracket(0, 1, vec![ScalarFn::zero(2), ScalarFn::one(2)]).unwrap();
        let (_, rep) = verify_normal_form(&bad, &c, vec![1], 3).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn factorization_of_orbit_inclusion() {
        let (_, b) = cylinder();
        let m = Chart::new("M", &[("theta", true)]).unwrap();
        let tm = AlgebroidPresentation::tangent(&m);
        let basemap = vec![m.parse("theta").unwrap(), ScalarFn::zero(1)];
        let phi = Morphism::new("incl", tm.clone(), b.clone(), basemap.clone(), vec![vec![ScalarFn::one(1)]]).unwrap();
        let frame = PullbackFrame::user(
            &m,
            basemap,
            vec![FramePair { name: "d_theta".into(), b: vec![ScalarFn::one(1)], u: vec![ScalarFn::one(1)] }],
        );
        let pb = build_pullback("P", &b, frame, 1).unwrap();
        let (phi_prime, rep) = factorize(&phi, &pb).unwrap();
        assert!(rep.passed(), "{rep}");
        assert_eq!(phi_prime.fiber(), &vec![vec![ScalarFn::one(1)]]);
    }

    #[test]
    fn non_admissible_map_rejected() {
        // anchor x d_y along the x-axis: constraint rank drops at the origin
        let c = Chart::new("R2", &[("x", false), ("y", false)]).unwrap();
        let b = AlgebroidPresentation::new("B", c.clone(), vec!["e".into()], vec![vec![ScalarFn::zero(2), c.parse("x").unwrap()]]).unwrap();
        let m = Chart::new("M", &[("s", false)]).unwrap();
        let basemap = vec![m.parse("s").unwrap(), ScalarFn::zero(1)];
        let (adm, _) = check_admissible(&b, &m, &basemap, 9).unwrap();
        assert!(!adm.certified);
        assert_eq!(adm.generic_rank, Some(2));
        let frame = PullbackFrame::user(&m, basemap, vec![]);
        assert!(build_pullback("P", &b, frame, 9).is_err());
        assert_eq!(check_admissible(&b, &m, &[ScalarFn::zero(1), ScalarFn::zero(1)], 9).unwrap().0.max_rank, 0);
    }
}
