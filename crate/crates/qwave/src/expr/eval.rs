//! Floating-point evaluation of closed expressions.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use super::canon::expr_to_ratfunc;
use super::poly::Poly;
use super::ratfunc::RatFunc;
use super::{Expr, ExprError};

/// Denominators smaller than this in magnitude count as poles.
pub const POLE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("unbound function symbol '{0}'")]
    UnboundFunction(String),
    #[error("jet variable '{0}' has no numeric value")]
    UnboundJet(String),
    #[error("evaluation at a pole (|denominator| < {POLE_THRESHOLD:e})")]
    Pole,
    #[error("logarithm of a non-positive value")]
    LogDomain,
    #[error("non-finite value produced")]
    NonFinite,
    #[error("{0}")]
    Canon(String),
}

impl EvalError {
    pub fn from_subst(e: super::subst::SubstError) -> Self {
        EvalError::Canon(e.to_string())
    }
}

pub fn eval_expr(e: &Expr, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    let r = expr_to_ratfunc(e).map_err(|err: ExprError| EvalError::Canon(err.to_string()))?;
    eval_ratfunc(&r, point)
}

pub fn eval_ratfunc(r: &RatFunc, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    let num = eval_poly(r.num(), point)?;
    let den = eval_poly(r.den(), point)?;
    if den.abs() < POLE_THRESHOLD {
        return Err(EvalError::Pole);
    }
    let v = num / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

pub fn eval_poly(p: &Poly, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    let mut acc = 0.0;
    for (m, c) in &p.terms {
        let mut t = c.to_f64().ok_or(EvalError::NonFinite)?;
        for (a, &k) in &m.powers {
            let base = eval_atom(a, point)?;
            t *= base.powi(k as i32);
        }
        if let Some(g) = &m.exparg {
            t *= eval_ratfunc(g, point)?.exp();
        }
        acc += t;
    }
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_atom(a: &super::atom::Atom, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    use super::atom::Atom;
    match a {
        Atom::Var(v) => point
            .get(v)
            .copied()
            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        Atom::Jet(j) => Err(EvalError::UnboundJet(j.name())),
        Atom::Func(f) => Err(EvalError::UnboundFunction(f.name.clone())),
        Atom::Log(g) => {
            let v = eval_ratfunc(g, point)?;
            if v <= 0.0 {
                Err(EvalError::LogDomain)
            } else {
                Ok(v.ln())
            }
        }
    }
}

/// Magnitude scale of an expression at a point: the incoherent sum of the
/// absolute values of all numerator monomials over |denominator|. Used to
/// make zero-test tolerances relative.
pub fn eval_scale(r: &RatFunc, point: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    let mut acc = 0.0f64;
    for (m, c) in &r.num().terms {
        let mut t = c.to_f64().ok_or(EvalError::NonFinite)?;
        for (a, &k) in &m.powers {
            t *= eval_atom(a, point)?.powi(k as i32);
        }
        if let Some(g) = &m.exparg {
            t *= eval_ratfunc(g, point)?.exp();
        }
        acc += t.abs();
    }
    let den = eval_poly(r.den(), point)?;
    if den.abs() < POLE_THRESHOLD {
        return Err(EvalError::Pole);
    }
    Ok(acc / den.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Bindings, Expr};

    fn pt(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn evaluates_product() {
        let e = Expr::var("y") * Expr::var("z");
        let v = e
            .eval_at(&pt(&[("y", 2.0), ("z", 3.0)]), &Bindings::new())
            .unwrap();
        assert_eq!(v, 6.0);
    }

    #[test]
    fn function_binding_then_eval() {
        // T_y/T_z with T = y*z at (2,3) is z/y = 1.5
        let decls = crate::expr::DeclTable::standard();
        let e = crate::expr::parse("T_y/T_z", &decls).unwrap();
        let b = Bindings::new().func("T", &["y", "z"], Expr::var("y") * Expr::var("z"));
        let v = e.eval_at(&pt(&[("y", 2.0), ("z", 3.0)]), &b).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn exp_at_zero() {
        let e = Expr::exp(Expr::var("u"));
        let v = e.eval_at(&pt(&[("u", 0.0)]), &Bindings::new()).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn pole_detected() {
        let e = Expr::one() / Expr::var("y");
        let r = e.eval_at(&pt(&[("y", 0.0)]), &Bindings::new());
        assert_eq!(r, Err(EvalError::Pole));
    }

    #[test]
    fn eval_matches_simplify() {
        // eval(e) == eval(simplify(e)) on a non-singular input
        let decls = crate::expr::DeclTable::standard();
        let e = crate::expr::parse("(y+z)^2/(y+z) - z", &decls).unwrap();
        let p = pt(&[("y", 1.25), ("z", 1.75)]);
        let v = e.eval_at(&p, &Bindings::new()).unwrap();
        assert!((v - 1.25).abs() < 1e-12);
    }
}
