//! Randomized algebraic properties of the expression kernel and the jet
//! machinery. The heavyweight 1000-case versions with pinned tolerances
//! live in the acceptance suite; these runs keep the same invariants under
//! continuous test at a lighter sample count, plus proptest shrinking for
//! the structural ones.

mod common;

use proptest::prelude::*;

use common::{random_expr, random_point, rng};
use qwave::expr::{parse, DeclTable, Expr};
use qwave::jet::{total_derivative, Direction};
use qwave::Bindings;

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i64..=3).prop_map(Expr::int),
        Just(Expr::var("y")),
        Just(Expr::var("z")),
        Just(Expr::var("u")),
        Just(Expr::func_d("T", &["y", "z"], &[1, 0])),
        Just(Expr::func_d("K", &["y", "z", "u"], &[0, 0, 1])),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Sum),
            prop::collection::vec(inner.clone(), 2..=2).prop_map(Expr::Prod),
            (inner.clone(), 2i64..=3).prop_map(|(e, k)| Expr::pow(e, k)),
            inner
                .clone()
                .prop_map(|e| e / (Expr::var("y") + Expr::var("z"))),
            Just(Expr::exp(Expr::var("u"))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplify_idempotent(e in arb_expr()) {
        let s1 = e.simplify().unwrap();
        let s2 = s1.simplify().unwrap();
        prop_assert_eq!(s1, s2);
    }

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let canonical = e.simplify().unwrap();
        let printed = canonical.to_dsl();
        let back = parse(&printed, &DeclTable::standard()).unwrap();
        prop_assert_eq!(canonical, back);
    }

    #[test]
    fn mixed_partials_commute(e in arb_expr()) {
        let yz = e.diff("y").unwrap().diff("z").unwrap();
        let zy = e.diff("z").unwrap().diff("y").unwrap();
        // Routes may normalize differently past the gcd budget; the
        // difference being the zero normal form is the exact statement.
        prop_assert!((yz - zy).is_zero_symbolic().unwrap());
    }

    #[test]
    fn subtraction_from_self_is_zero(e in arb_expr()) {
        let d = (e.clone() - e).simplify().unwrap();
        prop_assert!(d.is_zero_literal());
    }
}

#[test]
fn total_derivatives_commute_on_random_jet_expressions() {
    let mut r = rng(7);
    for case in 0..150 {
        let mut e = random_expr(&mut r, 2, false);
        // Mix in jets half the time.
        if case % 2 == 0 {
            e = e * Expr::jet(0, 1) + Expr::jet(1, 0);
        }
        let yz =
            total_derivative(&total_derivative(&e, Direction::Y).unwrap(), Direction::Z).unwrap();
        let zy =
            total_derivative(&total_derivative(&e, Direction::Z).unwrap(), Direction::Y).unwrap();
        assert!(
            (yz - zy).is_zero_symbolic().unwrap(),
            "commutator nonzero on case {case}: {e}"
        );
    }
}

#[test]
fn simplifier_preserves_values() {
    let mut r = rng(11);
    let mut checked = 0;
    'outer: for case in 0..200 {
        let e = random_expr(&mut r, 3, true);
        let s = e.simplify().unwrap();
        for _ in 0..5 {
            let p = random_point(&mut r);
            let (Ok(v1), Ok(v2)) = (
                e.eval_at(&p, &Bindings::new()),
                s.eval_at(&p, &Bindings::new()),
            ) else {
                continue 'outer;
            };
            if !v1.is_finite() || v1.abs() > 1e12 {
                continue 'outer;
            }
            let rel = (v1 - v2).abs() / v1.abs().max(1.0);
            assert!(rel <= 1e-9, "case {case}: {e} -> {s}, {v1} vs {v2}");
        }
        checked += 1;
    }
    assert!(checked > 100, "too many degenerate cases: {checked}");
}

#[test]
fn derivative_matches_central_difference() {
    let mut r = rng(13);
    let h = 1e-5;
    let mut checked = 0;
    'outer: for _ in 0..200 {
        let e = random_expr(&mut r, 2, true);
        for var in ["y", "z", "u"] {
            let d = e.diff(var).unwrap();
            let p = random_point(&mut r);
            let mut hi = p.clone();
            let mut lo = p.clone();
            *hi.get_mut(var).unwrap() += h;
            *lo.get_mut(var).unwrap() -= h;
            let (Ok(vhi), Ok(vlo), Ok(vd)) = (
                e.eval_at(&hi, &Bindings::new()),
                e.eval_at(&lo, &Bindings::new()),
                d.eval_at(&p, &Bindings::new()),
            ) else {
                continue 'outer;
            };
            if vd.abs() > 1e8 {
                continue 'outer;
            }
            let fd = (vhi - vlo) / (2.0 * h);
            let rel = (fd - vd).abs() / vd.abs().max(1.0);
            assert!(rel <= 1e-6, "{e}, d/d{var}: fd {fd} vs {vd}");
        }
        checked += 1;
    }
    assert!(checked > 100, "too many degenerate cases: {checked}");
}

#[test]
fn prolongation_linearity_on_random_operators() {
    use qwave::jet::{prolong, ConditionalOperator};
    let mut r = rng(17);
    for _ in 0..25 {
        let coeff = |r: &mut _| {
            let e: Expr = random_expr(r, 1, true);
            e.simplify().unwrap()
        };
        let (a1, b1, c1) = (coeff(&mut r), coeff(&mut r), coeff(&mut r));
        let (a2, b2, c2) = (coeff(&mut r), coeff(&mut r), coeff(&mut r));
        let op1 = ConditionalOperator::general(a1.clone(), b1.clone(), c1.clone()).unwrap();
        let op2 = ConditionalOperator::general(a2.clone(), b2.clone(), c2.clone()).unwrap();
        let sum = ConditionalOperator::general(
            (a1 + a2).simplify().unwrap(),
            (b1 + b2).simplify().unwrap(),
            (c1 + c2).simplify().unwrap(),
        )
        .unwrap();
        let (p1, p2, ps) = (
            prolong(&op1).unwrap(),
            prolong(&op2).unwrap(),
            prolong(&sum).unwrap(),
        );
        let eq = |a: &Expr, b: &Expr, c: &Expr| {
            let d = (a.clone() + b.clone() - c.clone()).simplify().unwrap();
            assert!(d.is_zero_literal(), "linearity violated");
        };
        eq(&p1.eta_yz, &p2.eta_yz, &ps.eta_yz);
        eq(&p1.eta_yy, &p2.eta_yy, &ps.eta_yy);
        eq(&p1.eta_zz, &p2.eta_zz, &ps.eta_zz);
    }
}

#[test]
fn elimination_idempotent_on_random_jet_polynomials() {
    use qwave::jet::{ConditionalOperator, Eliminator};
    let decls = DeclTable::standard();
    let op =
        ConditionalOperator::canonical_kl(parse("K", &decls).unwrap(), parse("L", &decls).unwrap())
            .unwrap();
    let el = Eliminator::new(&op, &parse("f", &decls).unwrap()).unwrap();
    let mut r = rng(19);
    for _ in 0..50 {
        let base = random_expr(&mut r, 2, false);
        let jets = [
            Expr::jet(1, 0),
            Expr::jet(0, 1),
            Expr::jet(2, 0),
            Expr::jet(1, 1),
        ];
        use rand::Rng as _;
        let j = jets[r.gen_range(0..jets.len())].clone();
        let e = (base * j + Expr::jet(1, 0)).simplify().unwrap();
        let once = el.eliminate(&e).unwrap();
        let twice = el.eliminate(&once).unwrap();
        assert_eq!(once, twice);
    }
}
