//! Closed-form operator families for the three canonical cases.
//!
//! Case 1 (`K_u = 0`, `K != 0`): `K = T_y/T_z`, `L = s u` with
//! `s = T_yz/T_z` for an arbitrary generating function `T(y,z)` (the
//! normalization `d = 0` is assumed). Case 2 (`K = 0`) collapses to a pair
//! of first-order relations. Case 3 (`K_u != 0`) is the exponential family
//! `K = exp(u)`, `L = s exp(u) + d` with `f = (s_y + d_z)/3` and two
//! constraints coupling `s` and `d`.

use serde::Serialize;

use super::{
    system, system_ku_zero, verify_against_system, verify_conditional_operator, DetsysError,
    SystemForm, VerifyOptions,
};
use crate::expr::canon::{canon, ratfunc_to_expr};
use crate::expr::ratfunc::RatFunc;
use crate::expr::{Bindings, Expr};
use crate::jet::{total_derivative, Direction};
use crate::report::{CheckItem, Verdict, VerificationReport};

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error(transparent)]
    Detsys(#[from] DetsysError),
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
    #[error("T_z is identically zero; use the a = 0 branch (condition u_z = L)")]
    TzIdenticallyZero,
    #[error("T must depend on (y, z) only; found {0}")]
    BadTDependencies(String),
    #[error("L_u is identically zero: first-order reduction unavailable; the condition is u_y = L with the f constraint only")]
    LuIdenticallyZero,
    #[error("K_u must vanish identically for the Case-1 construction")]
    KuNotZero,
    #[error("K is identically zero")]
    KZero,
    #[error("internal error: constructed pair violates its own determining equations: {0}")]
    ConstructionInconsistent(String),
    #[error("substitution failed: {0}")]
    Subst(String),
}

/// The Case-1 operator data generated from `T(y, z)`.
#[derive(Clone, Debug, Serialize)]
pub struct Case1Family {
    #[serde(serialize_with = "super::ser_expr")]
    pub t: Expr,
    #[serde(serialize_with = "super::ser_expr")]
    pub k: Expr,
    #[serde(serialize_with = "super::ser_expr")]
    pub s: Expr,
    /// `L = s * u`.
    #[serde(serialize_with = "super::ser_expr")]
    pub l: Expr,
}

/// `K = T_y/T_z`, `s = T_yz/T_z`, `L = s u`. The construction is checked
/// against the structural Case-1 determining equations before returning.
pub fn case1_from_t(t: &Expr) -> Result<Case1Family, CaseError> {
    let vars = t.variables();
    for v in &vars {
        if v != "y" && v != "z" {
            return Err(CaseError::BadTDependencies(v.clone()));
        }
    }
    let t_y = t.diff("y")?;
    let t_z = t.diff("z")?;
    if t_z.is_zero_symbolic()? {
        return Err(CaseError::TzIdenticallyZero);
    }
    let t_yz = t_y.diff("z")?;
    let k = (t_y / t_z.clone()).simplify()?;
    let s = (t_yz / t_z).simplify()?;
    let l = (s.clone() * Expr::var("u")).simplify()?;

    // The pair must satisfy the structural (f-free) Case-1 equations
    // identically.
    let sys = system_ku_zero()?;
    let report = verify_against_system(&sys, None, &k, &l, &VerifyOptions::default())?;
    if !report.pass {
        return Err(CaseError::ConstructionInconsistent(format!("{report:?}")));
    }
    Ok(Case1Family {
        t: t.clone(),
        k,
        s,
        l,
    })
}

/// The linear first-order condition on `f` for a Case-1 pair `(K, L)`:
/// the generated `f`-equation with `(K, L)` substituted and `f` opaque,
/// cleared of denominators.
pub fn case1_f_condition(k: &Expr, l: &Expr) -> Result<Expr, CaseError> {
    if k.is_zero_symbolic()? {
        return Err(CaseError::KZero);
    }
    if !k.diff("u")?.is_zero_symbolic()? {
        return Err(CaseError::KuNotZero);
    }
    let sys = system_ku_zero()?;
    let member = sys
        .members
        .iter()
        .find(|m| m.cleared.mentions_func("f"))
        .expect("Case-1 system has an f equation");
    // Substitute into the exact rational form, then clear denominators of
    // the result; this yields the minimal proportional residual.
    let b =
        Bindings::new()
            .func("K", &["y", "z"], k.clone())
            .func("L", &["y", "z", "u"], l.clone());
    let substituted = member
        .raw
        .substitute(&b)
        .map_err(|e| CaseError::Subst(e.to_string()))?;
    let r = canon(&substituted)?;
    Ok(ratfunc_to_expr(&RatFunc::from_poly(
        r.num().integer_normalized(),
    )))
}

/// Check a candidate `f` against the Case-1 condition.
pub fn case1_check_f(
    k: &Expr,
    l: &Expr,
    f: &Expr,
    opts: &VerifyOptions,
) -> Result<VerificationReport, CaseError> {
    let condition = case1_f_condition(k, l)?;
    let b = Bindings::new().func("f", &["y", "z", "u"], f.clone());
    let substituted = condition
        .substitute(&b)
        .map_err(|e| CaseError::Subst(e.to_string()))?;
    let outcome = opts
        .zero_test
        .verdict(&substituted, &Bindings::new())
        .map_err(DetsysError::Zero)?;
    let item = CheckItem {
        label: "f condition".into(),
        origin: Some("1".into()),
        verdict: Verdict::from_outcome(&outcome, &substituted),
        max_numeric_residual: outcome.max_abs,
        tolerance: outcome.max_abs.map(|_| opts.zero_test.tolerance),
    };
    Ok(VerificationReport::from_items(vec![item]))
}

/// Case 2 as an explicit pair of first-order relations with its
/// cross-derivative compatibility residual.
#[derive(Clone, Debug, Serialize)]
pub struct Case2System {
    /// Right side of `u_y = ...`.
    #[serde(serialize_with = "super::ser_expr")]
    pub uy_rhs: Expr,
    /// Right side of `u_z = ...`.
    #[serde(serialize_with = "super::ser_expr")]
    pub uz_rhs: Expr,
    /// `D_z(uy_rhs) - D_y(uz_rhs)` along the system; zero iff compatible.
    #[serde(serialize_with = "super::ser_expr")]
    pub compatibility: Expr,
}

/// `u_y = L`, `u_z = (f - L_z)/L_u`, requiring `L_u != 0`.
pub fn case2_first_order_system(l: &Expr, f: &Expr) -> Result<Case2System, CaseError> {
    let l_u = l.diff("u")?;
    if l_u.is_zero_symbolic()? {
        return Err(CaseError::LuIdenticallyZero);
    }
    let uy_rhs = l.simplify()?;
    let uz_rhs = ((f.clone() - l.diff("z")?) / l_u).simplify()?;

    // Cross derivatives along the system must agree.
    let on_system = Bindings::new()
        .jet(1, 0, uy_rhs.clone())
        .jet(0, 1, uz_rhs.clone());
    let dz_uy = total_derivative(&uy_rhs, Direction::Z)?
        .substitute(&on_system)
        .map_err(|e| CaseError::Subst(e.to_string()))?;
    let dy_uz = total_derivative(&uz_rhs, Direction::Y)?
        .substitute(&on_system)
        .map_err(|e| CaseError::Subst(e.to_string()))?;
    let compatibility = (dz_uy - dy_uz).simplify()?;
    Ok(Case2System {
        uy_rhs,
        uz_rhs,
        compatibility,
    })
}

/// The exponential family of Case 3 with its two `(s, d)` constraints.
#[derive(Clone, Debug, Serialize)]
pub struct Case3Family {
    #[serde(serialize_with = "super::ser_expr")]
    pub k: Expr,
    #[serde(serialize_with = "super::ser_expr")]
    pub l: Expr,
    #[serde(serialize_with = "super::ser_expr")]
    pub f: Expr,
    #[serde(serialize_with = "super::ser_expr")]
    pub constraint1: Expr,
    #[serde(serialize_with = "super::ser_expr")]
    pub constraint2: Expr,
    pub constraints: VerificationReport,
    pub system: VerificationReport,
}

/// Construct `K = exp(u)`, `L = s exp(u) + d`, `f = (s_y + d_z)/3` and
/// evaluate both constraints plus the full determining system. Constraint
/// failures are reported, not thrown.
pub fn case3_construct(s: &Expr, d: &Expr, opts: &VerifyOptions) -> Result<Case3Family, CaseError> {
    let k = Expr::exp(Expr::var("u"));
    let l = (s.clone() * Expr::exp(Expr::var("u")) + d.clone()).simplify()?;
    let f = ((s.diff("y")? + d.diff("z")?) * Expr::ratio(1, 3)).simplify()?;

    let s_y = s.diff("y")?;
    let s_yz = s_y.diff("z")?;
    let s_yy = s_y.diff("y")?;
    let d_z = d.diff("z")?;
    let d_zz = d_z.diff("z")?;
    let d_yz = d.diff("y")?.diff("z")?;

    // 2 s_yz - s d_z + 2 s_y s - d_zz
    let constraint1 = (Expr::int(2) * s_yz - s.clone() * d_z.clone()
        + Expr::int(2) * s_y.clone() * s.clone()
        - d_zz)
        .simplify()?;
    // -s_yy + 2 d_yz + s_y d - 2 d_z d
    let constraint2 = (-s_yy + Expr::int(2) * d_yz + s_y * d.clone()
        - Expr::int(2) * d_z * d.clone())
    .simplify()?;

    let mut items = Vec::new();
    for (i, c) in [&constraint1, &constraint2].into_iter().enumerate() {
        let outcome = opts
            .zero_test
            .verdict(c, &Bindings::new())
            .map_err(DetsysError::Zero)?;
        items.push(CheckItem {
            label: format!("constraint {}", i + 1),
            origin: None,
            verdict: Verdict::from_outcome(&outcome, c),
            max_numeric_residual: outcome.max_abs,
            tolerance: outcome.max_abs.map(|_| opts.zero_test.tolerance),
        });
    }
    let constraints = VerificationReport::from_items(items);
    let system = verify_conditional_operator(Some(&f), &k, &l, SystemForm::ANonzero, opts)?;
    Ok(Case3Family {
        k,
        l,
        f,
        constraint1,
        constraint2,
        constraints,
        system,
    })
}

/// Derive `f` for the Case-3 family from the generated system itself:
/// substitute `K = exp(u)`, `L = s exp(u) + d` with opaque `s`, `d` and
/// opaque `f`, then solve the member linear in `f`. Returns the solved `f`.
pub fn case3_f_from_system() -> Result<Expr, CaseError> {
    let sys = system(SystemForm::ANonzero)?;
    let s = Expr::func("s", &["y", "z"]);
    let d = Expr::func("d", &["y", "z"]);
    let b = Bindings::new()
        .func("K", &["y", "z", "u"], Expr::exp(Expr::var("u")))
        .func("L", &["y", "z", "u"], s * Expr::exp(Expr::var("u")) + d);
    // The u_z^1 member carries the -3 K_u f term and is linear in f.
    let member = sys
        .members
        .iter()
        .find(|m| m.origin == "u_z")
        .expect("a != 0 system has a u_z member");
    let substituted = member
        .cleared
        .substitute(&b)
        .map_err(|e| CaseError::Subst(e.to_string()))?;
    solve_linear_in_f(&substituted)
}

/// Solve `expr == 0` for the bare `f` application, requiring linearity.
fn solve_linear_in_f(e: &Expr) -> Result<Expr, CaseError> {
    let r = canon(e)?;
    let f_atom = crate::expr::atom::Atom::Func(crate::expr::atom::FuncAtom {
        name: "f".into(),
        deps: vec!["y".into(), "z".into(), "u".into()],
        index: vec![0, 0, 0],
        args: None,
    });
    let grouped = r.num().collect_by_atoms(std::slice::from_ref(&f_atom));
    let mut coeff = crate::expr::poly::Poly::zero();
    let mut rest = crate::expr::poly::Poly::zero();
    for (key, p) in grouped {
        match key[0] {
            0 => rest = rest.add(&p),
            1 => coeff = coeff.add(&p),
            _ => {
                return Err(CaseError::ConstructionInconsistent(
                    "equation not linear in f".into(),
                ))
            }
        }
    }
    if coeff.is_zero() {
        return Err(CaseError::ConstructionInconsistent(
            "equation does not involve f".into(),
        ));
    }
    let sol = RatFunc::from_poly(rest.neg())
        .div(&RatFunc::from_poly(coeff))
        .map_err(|e| CaseError::Expr(crate::expr::ExprError::Arith(e)))?;
    Ok(ratfunc_to_expr(&sol))
}

/// The generating functions used throughout the tests and the catalog.
pub fn t_catalog() -> Vec<Expr> {
    let y = Expr::var("y");
    let z = Expr::var("z");
    vec![
        (y.clone() + z.clone()).simplify().unwrap(),
        (y.clone() * z.clone()).simplify().unwrap(),
        (Expr::pow(y.clone(), 2) * z.clone()).simplify().unwrap(),
        (y.clone() + Expr::pow(z.clone(), 2)).simplify().unwrap(),
        (Expr::exp(y.clone()) * z.clone()).simplify().unwrap(),
        (y / z).simplify().unwrap(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, DeclTable};

    fn p(s: &str) -> Expr {
        parse(s, &DeclTable::standard()).unwrap()
    }

    #[test]
    fn case1_linear_t() {
        let fam = case1_from_t(&p("y+z")).unwrap();
        assert_eq!(fam.k, Expr::one());
        assert_eq!(fam.s, Expr::zero());
        assert_eq!(fam.l, Expr::zero());
    }

    #[test]
    fn case1_product_t() {
        let fam = case1_from_t(&p("y*z")).unwrap();
        assert_eq!(fam.k, p("z/y"));
        assert_eq!(fam.s, p("1/y"));
        assert_eq!(fam.l, p("u/y"));
    }

    #[test]
    fn case1_quadratic_t() {
        let fam = case1_from_t(&p("y^2*z")).unwrap();
        assert_eq!(fam.k, p("2*z/y"));
        assert_eq!(fam.s, p("2/y"));
    }

    #[test]
    fn case1_rejects_tz_zero() {
        assert!(matches!(
            case1_from_t(&p("y^2")),
            Err(CaseError::TzIdenticallyZero)
        ));
    }

    #[test]
    fn case1_rejects_u_dependence() {
        assert!(matches!(
            case1_from_t(&p("y*u")),
            Err(CaseError::BadTDependencies(_))
        ));
    }

    #[test]
    fn f_condition_for_translations() {
        // K = 1, L = 0: the condition is proportional to f_y + f_z.
        let cond = case1_f_condition(&Expr::one(), &Expr::zero()).unwrap();
        let refd = DeclTable::standard();
        let expect = parse("f_y + f_z", &refd).unwrap();
        let diff = (cond.clone() - expect.clone()).simplify().unwrap();
        let sum = (cond + expect).simplify().unwrap();
        assert!(diff.is_zero_literal() || sum.is_zero_literal());
    }

    #[test]
    fn f_condition_for_product_t() {
        // K = z/y, L = u/y: proportional to y f_y + z f_z + u f_u + f.
        let cond = case1_f_condition(&p("z/y"), &p("u/y")).unwrap();
        let expect = p("y*f_y + z*f_z + u*f_u + f");
        let diff = (cond.clone() - expect.clone()).simplify().unwrap();
        let sum = (cond + expect).simplify().unwrap();
        assert!(
            diff.is_zero_literal() || sum.is_zero_literal(),
            "condition differs beyond sign"
        );
    }

    #[test]
    fn f_condition_accepts_solution() {
        // f = 1/(y+z) solves the condition for K = z/y, L = u/y.
        let rep = case1_check_f(
            &p("z/y"),
            &p("u/y"),
            &p("1/(y+z)"),
            &VerifyOptions::default(),
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
        // exp(y-z) solves it for K = 1, L = 0.
        let rep = case1_check_f(
            &Expr::one(),
            &Expr::zero(),
            &p("exp(y-z)"),
            &VerifyOptions::default(),
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn case2_pair_and_compatibility() {
        // L = u, f = u: pair (u_y = u, u_z = u), compatible.
        let sys = case2_first_order_system(&p("u"), &p("u")).unwrap();
        assert_eq!(sys.uy_rhs, p("u"));
        assert_eq!(sys.uz_rhs, p("u"));
        assert!(sys.compatibility.is_zero_literal());
        // L = u, f = 0: pair (u_y = u, u_z = 0), compatible.
        let sys = case2_first_order_system(&p("u"), &Expr::zero()).unwrap();
        assert_eq!(sys.uz_rhs, Expr::zero());
        assert!(sys.compatibility.is_zero_literal());
    }

    #[test]
    fn case2_requires_lu_nonzero() {
        assert!(matches!(
            case2_first_order_system(&p("y"), &Expr::zero()),
            Err(CaseError::LuIdenticallyZero)
        ));
    }

    #[test]
    fn case3_constant_coefficients() {
        let fam = case3_construct(&Expr::one(), &Expr::one(), &VerifyOptions::default()).unwrap();
        assert_eq!(fam.f, Expr::zero());
        assert!(fam.constraints.pass, "{:?}", fam.constraints);
        assert!(fam.system.pass, "{:?}", fam.system);
    }

    #[test]
    fn case3_d_of_y_only() {
        let fam = case3_construct(&Expr::zero(), &p("y"), &VerifyOptions::default()).unwrap();
        assert_eq!(fam.f, Expr::zero());
        assert!(fam.constraints.pass);
        assert!(fam.system.pass);
    }

    #[test]
    fn case3_s_equal_y_fails_first_constraint() {
        let fam = case3_construct(&p("y"), &Expr::zero(), &VerifyOptions::default()).unwrap();
        assert_eq!(fam.f, Expr::ratio(1, 3));
        assert_eq!(fam.constraint1, p("2*y"));
        assert!(!fam.constraints.pass);
        assert!(fam.constraints.items[1].verdict.passes());
    }

    #[test]
    fn case3_f_formula_recovered_from_system() {
        let f = case3_f_from_system().unwrap();
        let decls = DeclTable::standard();
        let expect = parse("(s_y + d_z)/3", &decls).unwrap();
        assert_eq!(f, expect);
    }
}
