//! Cross-module invariants: the symbolic and numeric routes must agree.

use qwave::detsys::cases::case1_from_t;
use qwave::detsys::lie::lie_invariance_check;
use qwave::detsys::{verify_conditional_operator, SystemForm, VerifyOptions};
use qwave::expr::{parse, DeclTable, Expr};
use qwave::jet::ConditionalOperator;
use qwave::numeric::{integrate_characteristics, Compiled};
use qwave::reduction::catalog;

fn p(s: &str) -> Expr {
    parse(s, &DeclTable::standard()).unwrap()
}

/// Along every integrated characteristic curve of a catalog K, the
/// symbolic invariant omega stays constant to 1e-8 relative.
#[test]
fn omega_constant_along_characteristic_curves() {
    for entry in catalog() {
        let fam = case1_from_t(&entry.t).unwrap();
        let k_c = match Compiled::new(&fam.k, &["y", "z"]) {
            Ok(c) => c,
            Err(e) => panic!("K = {} not compilable: {e}", fam.k),
        };
        let omega_c = Compiled::new(&entry.omega, &["y", "z"]).unwrap();
        let seeds = [(1.0, 1.0), (1.0, 1.5), (1.2, 1.9)];
        let curves =
            integrate_characteristics(&|y, z| k_c.eval(&[y, z]), &seeds, (1.0, 2.0), 1e-3, 1e9)
                .unwrap();
        for curve in curves {
            assert!(!curve.truncated, "curve blew up for T = {}", entry.t);
            let w0 = omega_c.eval(&[curve.seed.0, curve.seed.1]).unwrap();
            for (y, z) in &curve.points {
                let w = omega_c.eval(&[*y, *z]).unwrap();
                let rel = (w - w0).abs() / w0.abs().max(1.0);
                assert!(
                    rel < 1e-8,
                    "omega drift {rel:e} along T = {} at ({y}, {z})",
                    entry.t
                );
            }
        }
    }
}

/// The operator Q = d_y + K d_z annihilates the catalog invariants:
/// Q omega = omega_y + K omega_z = 0, the first characteristic equation.
#[test]
fn operator_annihilates_omega() {
    for entry in catalog() {
        let fam = case1_from_t(&entry.t).unwrap();
        let q = ConditionalOperator::canonical_kl(fam.k.clone(), Expr::zero()).unwrap();
        let applied = q.apply(&entry.omega).unwrap();
        assert!(
            applied.is_zero_literal(),
            "Q omega != 0 for T = {}: {applied}",
            entry.t
        );
    }
}

/// A Lie point symmetry is in particular a conditional one: the
/// translation operator passes both checks with a consistent f.
#[test]
fn lie_symmetry_is_conditional_on_translations() {
    let opts = VerifyOptions::default();
    for f in [Expr::zero(), p("exp(y-z)")] {
        // Classical check for Q = d_y + d_z.
        let q = ConditionalOperator::general(Expr::one(), Expr::one(), Expr::zero()).unwrap();
        let lie = lie_invariance_check(&q, &f, &opts).unwrap();
        assert!(lie.pass, "lie check failed for f = {f}");
        // Conditional check in canonical form (K = 1, L = 0).
        let cond = verify_conditional_operator(
            Some(&f),
            &Expr::one(),
            &Expr::zero(),
            SystemForm::ANonzero,
            &opts,
        )
        .unwrap();
        assert!(cond.pass, "conditional check failed for f = {f}: {cond:?}");
    }
}

/// Closed-form reduction soundness: a phi that satisfies the normalized
/// ODE exactly assembles to a u with u_yz - f = 0 symbolically.
#[test]
fn exact_phi_solves_the_pde_symbolically() {
    // T = y+z, sigma = 1, omega = y-z, phi(w) = w^2: u = (y-z)^2, f = -2.
    let u = p("(y-z)^2");
    let res = (u.diff("y").unwrap().diff("z").unwrap() - p("-2"))
        .simplify()
        .unwrap();
    assert!(res.is_zero_literal());

    // T = yz, sigma = y, omega = y/z, phi(w) = c1 + c2/w:
    // u = y*(c1 + c2 z/y) = c1 y + c2 z, f = 0.
    let u = p("y*(c1 + c2*z/y)");
    let res = u.diff("y").unwrap().diff("z").unwrap();
    assert!(res.is_zero_literal());
}

/// Everything in the kernel is immutable; simplification and verification
/// run concurrently without coordination.
#[test]
fn concurrent_use_is_safe() {
    let handles: Vec<_> = (0..8)
        .map(|i| {
            std::thread::spawn(move || {
                let e = p("1/(y+z)^2 + z/(y*(y+z)^2) - 1/(y*(y+z))");
                assert!(e.is_zero_literal());
                let rep = verify_conditional_operator(
                    Some(&p("1/(y+z)")),
                    &p("z/y"),
                    &p("u/y"),
                    SystemForm::ANonzero,
                    &VerifyOptions::default(),
                )
                .unwrap();
                assert!(rep.pass, "thread {i}");
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
}
