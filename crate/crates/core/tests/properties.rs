#![allow(clippy::needless_range_loop)]

mod common;

use common::{polynomial, scalar_fn, semidirect_lie_algebra, small_q};
use modclass_core::algebroid::AlgebroidPresentation;
use modclass_core::category::{delta0, delta1, Cochain0, Diagram};
use modclass_core::cohomology::{period_certificate, solve_exact, AnsatzSpace, ExactSolve, PeriodOutcome};
use modclass_core::extension::{induced_rep, ExtensionPresentation};
use modclass_core::pullback::{build_pullback, PullbackFrame};
use modclass_core::representation::{LineSection, Representation, Sections};
use modclass_core::{Chart, Morphism, ScalarFn, Q};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn sample_points(dim: usize) -> Vec<Vec<f64>> {
    (0..100).map(|i| (0..dim).map(|k| ((i * 7 + k * 13) % 23) as f64 / 7.0 - 1.5).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_commutes(f in scalar_fn(vec![false, true], 4), g in scalar_fn(vec![false, true], 4)) {
        prop_assert_eq!(&f * &g, &g * &f);
        prop_assert!((&f + &(-&f)).is_zero());
    }

    #[test]
    fn partial_is_a_derivation(f in scalar_fn(vec![false, false], 3), g in scalar_fn(vec![false, false], 3), k in 0usize..2) {
        let lhs = (&f * &g).partial(k);
        let rhs = &(&f.partial(k) * &g) + &(&f * &g.partial(k));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn zero_test_agrees_with_evaluation(f in scalar_fn(vec![false, true], 4), g in scalar_fn(vec![false, true], 4)) {
        let lhs = (&f + &g).pow(2);
        let rhs = &(&f.pow(2) + &(&f * &g).scale(&Q::from_integer(2.into()))) + &g.pow(2);
        let diff = &lhs - &rhs;
        prop_assert!(diff.is_zero());
        for p in sample_points(2) {
            let scale = 1.0 + lhs.evaluate(&p).abs();
            prop_assert!((lhs.evaluate(&p) - rhs.evaluate(&p)).abs() < 1e-8 * scale);
        }
        if !f.is_zero() {
            prop_assert!(sample_points(2).iter().any(|p| f.evaluate(p).abs() > 1e-12));
        }
    }

    #[test]
    fn substitution_is_multiplicative(
        f in scalar_fn(vec![false, false], 3),
        g in scalar_fn(vec![false, false], 3),
        a in small_q(), b in small_q(), c in small_q(),
    ) {
        // linear base map R^2 -> R^2
        let src = Chart::new("S", &[("s", false), ("t", false)]).unwrap();
        let basemap = vec![
            &ScalarFn::var(2, 0).scale(&a) + &ScalarFn::var(2, 1).scale(&b),
            ScalarFn::var(2, 1).scale(&c),
        ];
        let _ = src;
        let lhs = (&f * &g).substitute(&basemap).unwrap();
        let rhs = &f.substitute(&basemap).unwrap() * &g.substitute(&basemap).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn d_squared_vanishes_on_semidirect_products(
        d in prop::collection::vec(prop::collection::vec(-2i64..=2, 2), 2),
        basis in prop::collection::vec(prop::collection::vec(-2i64..=2, 3), 3),
        coeffs in prop::collection::vec(small_q(), 3),
    ) {
        let d: Vec<Vec<Q>> = d.into_iter().map(|r| r.into_iter().map(|c| Q::from_integer(c.into())).collect()).collect();
        let basis: Vec<Vec<Q>> = basis.into_iter().map(|r| r.into_iter().map(|c| Q::from_integer(c.into())).collect()).collect();
        if let Some(g) = semidirect_lie_algebra(&d, &basis) {
            prop_assert!(g.check_axioms().passed());
            let alpha = g.form_from_coeffs(&coeffs.iter().map(|c| ScalarFn::constant(0, c.clone())).collect::<Vec<_>>());
            prop_assert!(g.d(&g.d(&alpha)).is_zero());
        }
    }

    #[test]
    fn char_of_dual_and_tensor(
        g1 in polynomial(2, 3), g2 in polynomial(2, 3),
        c1 in small_q(), c2 in small_q(), s in small_q(),
    ) {
        let chart = Chart::new("R2", &[("x", false), ("y", false)]).unwrap();
        let t = AlgebroidPresentation::tangent(&chart);
        let gamma = |g: &ScalarFn, c: &Q| vec![&g.partial(0) + &ScalarFn::constant(2, c.clone()), g.partial(1)];
        let d1 = Representation::line("D1", &t, gamma(&g1, &c1)).unwrap();
        let d2 = Representation::line("D2", &t, gamma(&g2, &c2)).unwrap();
        prop_assert!(d1.is_flat() && d2.is_flat());
        let lam = LineSection::unit(ScalarFn::exp_linear(vec![s.clone(), Q::zero()]).scale(&Q::from_integer(3.into()))).unwrap();
        let ch = d1.char_cocycle(&lam).unwrap();
        let ch_dual = d1.dual().char_cocycle(&lam.inverse().unwrap()).unwrap();
        prop_assert_eq!(ch_dual, ch.neg());
        let ch2 = d2.char_cocycle(&LineSection::one(2)).unwrap();
        let ch12 = d1.tensor(&d2).unwrap().char_cocycle(&lam).unwrap();
        prop_assert_eq!(ch12, ch.add(&ch2));
    }

    #[test]
    fn exact_cocycles_on_tori(f in scalar_fn(vec![true, true], 5), a in small_q()) {
        let chart = Chart::new("T2", &[("u", true), ("v", true)]).unwrap();
        let t = AlgebroidPresentation::tangent(&chart);
        let f = &f + &ScalarFn::constant(2, a);
        let alpha = t.d(&t.function(f.clone()));
        for k in 0..2 {
            let dir: Vec<Q> = (0..2).map(|i| if i == k { Q::one() } else { Q::zero() }).collect();
            let out = period_certificate(&t, &alpha, &dir, k, 5).unwrap();
            let ok = matches!(out, PeriodOutcome::Inconclusive { ref mean } if mean.is_zero());
            prop_assert!(ok);
        }
        let space = AnsatzSpace::new(&chart, 0, 4);
        match solve_exact(&t, &alpha, &space).unwrap() {
            ExactSolve::Primitive(g) => prop_assert_eq!(t.d(&t.function(g)), alpha),
            other => prop_assert!(false, "no primitive: {:?}", other),
        }
    }

    #[test]
    fn delta_squared_vanishes(
        a in prop::collection::vec(-3i64..=3, 4),
        b in prop::collection::vec(-3i64..=3, 2),
        fs in prop::collection::vec(polynomial(2, 3), 2),
        h in polynomial(1, 3),
    ) {
        let r2 = Chart::new("R2", &[("x", false), ("y", false)]).unwrap();
        let r1 = Chart::new("R", &[("z", false)]).unwrap();
        let t2 = AlgebroidPresentation::tangent(&r2);
        let t2b = t2.clone().with_name("TR2b");
        let t1 = AlgebroidPresentation::tangent(&r1);
        let q = |n: i64| Q::from_integer(n.into());
        let lin = |row: &[i64], dim: usize| {
            row.iter().enumerate().fold(ScalarFn::zero(dim), |acc, (i, c)| &acc + &ScalarFn::var(dim, i).scale(&q(*c)))
        };
        let f_map = vec![lin(&a[0..2], 2), lin(&a[2..4], 2)];
        let g_map = vec![lin(&b, 2)];
        let phi = Morphism::tangent_map("phi", &t2, &t2b, f_map).unwrap();
        let psi = Morphism::tangent_map("psi", &t2b, &t1, g_map).unwrap();
        let comp = phi.compose(&psi).unwrap().with_name("psi_phi");
        let mut d = Diagram::new();
        d.add_object("A", t2.clone()).unwrap();
        d.add_object("B", t2b.clone()).unwrap();
        d.add_object("C", t1.clone()).unwrap();
        d.add_arrow(phi).unwrap();
        d.add_arrow(psi).unwrap();
        d.add_arrow(comp).unwrap();
        d.close_compositions().unwrap();
        let mut u = Cochain0::new();
        u.insert("A".into(), t2.d(&t2.function(fs[0].clone())));
        u.insert("B".into(), t2b.d(&t2b.function(fs[1].clone())).add(&t2b.form_from_coeffs(&[ScalarFn::one(2), ScalarFn::zero(2)])));
        u.insert("C".into(), t1.d(&t1.function(h)));
        let v = delta0(&d, &u).unwrap();
        for (_, val) in delta1(&d, &v).unwrap() {
            prop_assert!(val.is_zero());
        }
    }

    #[test]
    fn lie_algebra_pullbacks_are_algebroids(
        d in prop::collection::vec(prop::collection::vec(-2i64..=2, 2), 2),
        basis in prop::collection::vec(prop::collection::vec(-2i64..=2, 3), 3),
    ) {
        let d: Vec<Vec<Q>> = d.into_iter().map(|r| r.into_iter().map(|c| Q::from_integer(c.into())).collect()).collect();
        let basis: Vec<Vec<Q>> = basis.into_iter().map(|r| r.into_iter().map(|c| Q::from_integer(c.into())).collect()).collect();
        if let Some(g) = semidirect_lie_algebra(&d, &basis) {
            let m = Chart::new("M", &[("x", false), ("theta", true)]).unwrap();
            let frame = PullbackFrame::product(&g, &m, vec![]).unwrap();
            let pb = build_pullback("P", &g, frame, 11).unwrap();
            prop_assert!(pb.algebroid.check_axioms().passed());
            prop_assert!(pb.projection.check().passed());
            let rel = pb.projection.relative_modular(&Sections::standard(2), &Sections::standard(0)).unwrap();
            prop_assert!(rel.is_zero());
        }
    }

    #[test]
    fn induced_rep_ignores_choice_of_lift(ps in prop::collection::vec(polynomial(1, 3), 3)) {
        let ext = so3_extension();
        let base = induced_rep(&ext).unwrap();
        // column 0 lifts d_x to d_x + sum p_s k_s
        let mut lifts = vec![vec![ScalarFn::one(1)]];
        lifts.extend(ps.iter().map(|p| vec![p.clone()]));
        let other = induced_rep(&ext.clone().with_lifts(lifts)).unwrap();
        prop_assert_eq!(base.line_coeffs().unwrap(), other.line_coeffs().unwrap());
    }
}

fn so3_extension() -> ExtensionPresentation {
    let chart = Chart::new("R", &[("x", false)]).unwrap();
    let q = |n: i64| ScalarFn::int(1, n);
    let z = ScalarFn::zero(1);
    let mut anchor = vec![vec![ScalarFn::one(1)]];
    anchor.extend(vec![vec![z.clone()]; 3]);
    let frame: Vec<String> = ["d_x", "k1", "k2", "k3"].iter().map(|s| s.to_string()).collect();
    let mut a = AlgebroidPresentation::new("A", chart.clone(), frame, anchor).unwrap();
    a.set_bracket(1, 2, vec![z.clone(), z.clone(), z.clone(), q(1)]).unwrap();
    a.set_bracket(2, 3, vec![z.clone(), q(1), z.clone(), z.clone()]).unwrap();
    a.set_bracket(1, 3, vec![z.clone(), z.clone(), q(-1), z.clone()]).unwrap();
    let mut c =
        AlgebroidPresentation::new("C", chart.clone(), vec!["k1".into(), "k2".into(), "k3".into()], vec![vec![z.clone()]; 3]).unwrap();
    c.set_bracket(0, 1, vec![z.clone(), z.clone(), q(1)]).unwrap();
    c.set_bracket(1, 2, vec![q(1), z.clone(), z.clone()]).unwrap();
    c.set_bracket(0, 2, vec![z.clone(), q(-1), z.clone()]).unwrap();
    let tm = AlgebroidPresentation::tangent(&chart);
    let id = vec![ScalarFn::var(1, 0)];
    let incl: Vec<Vec<ScalarFn>> = (0..4).map(|r| (0..3).map(|s| ScalarFn::int(1, (r == s + 1) as i64)).collect()).collect();
    let proj = vec![vec![q(1), z.clone(), z.clone(), z.clone()]];
    let i = Morphism::new("i", c, a.clone(), id.clone(), incl).unwrap();
    let phi = Morphism::new("Phi", a, tm, id, proj).unwrap();
    ExtensionPresentation::new("ext", i, phi, LineSection::one(1), 1).unwrap()
}
