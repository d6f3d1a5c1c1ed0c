//! Conversion between expression trees and the rational normal form.

use num_rational::BigRational;
use num_traits::One;

use super::atom::{Atom, FuncAtom, JetVar};
use super::poly::{Coef, Monomial, Poly};
use super::ratfunc::RatFunc;
use super::{Expr, ExprError, FunctionSymbol};

/// Normalize the few unicode spellings the DSL accepts.
pub fn normalize_name(name: &str) -> String {
    match name {
        "\u{03c9}" => "omega".to_string(),
        "\u{03c6}" | "\u{03d5}" => "phi".to_string(),
        "\u{03c3}" => "sigma".to_string(),
        "\u{03bb}" => "lambda".to_string(),
        _ => name.to_string(),
    }
}

pub fn expr_to_ratfunc(e: &Expr) -> Result<RatFunc, ExprError> {
    match e {
        Expr::Int(n) => Ok(RatFunc::constant(BigRational::from_integer(n.clone()))),
        Expr::Rat(r) => Ok(RatFunc::constant(r.clone())),
        Expr::Var(v) => Ok(RatFunc::from_atom(Atom::Var(normalize_name(v)))),
        Expr::Jet { dy, dz } => {
            if *dy == 0 && *dz == 0 {
                return Ok(RatFunc::from_atom(Atom::var("u")));
            }
            Ok(RatFunc::from_atom(Atom::Jet(JetVar::new(*dy, *dz))))
        }
        Expr::Func { sym, index, args } => func_to_ratfunc(sym, index, args),
        Expr::Sum(items) => {
            let mut acc = RatFunc::zero();
            for it in items {
                acc = acc.add(&expr_to_ratfunc(it)?);
            }
            Ok(acc)
        }
        Expr::Prod(items) => {
            let mut acc = RatFunc::one();
            for it in items {
                acc = acc.mul(&expr_to_ratfunc(it)?);
            }
            Ok(acc)
        }
        Expr::Pow(base, k) => Ok(expr_to_ratfunc(base)?.powi(*k)?),
        Expr::Exp(arg) => Ok(RatFunc::exp_of(expr_to_ratfunc(arg)?)),
        Expr::Log(arg) => {
            let g = expr_to_ratfunc(arg)?;
            Ok(log_of(g))
        }
    }
}

/// `log` stays opaque apart from `log(1) = 0` and `log(exp(g)) = g`.
pub fn log_of(g: RatFunc) -> RatFunc {
    if g.is_one() {
        return RatFunc::zero();
    }
    if g.den().is_one() && g.num().terms.len() == 1 {
        let (m, c) = g.num().terms.iter().next().unwrap();
        if m.powers.is_empty() && c.is_one() {
            if let Some(arg) = &m.exparg {
                return arg.as_ref().clone();
            }
        }
    }
    RatFunc::from_atom(Atom::Log(Box::new(g)))
}

fn func_to_ratfunc(
    sym: &FunctionSymbol,
    index: &[u32],
    args: &Option<Vec<Expr>>,
) -> Result<RatFunc, ExprError> {
    if index.len() != sym.deps.len() {
        return Err(ExprError::IndexMismatch {
            name: sym.name.clone(),
            index_len: index.len(),
            dep_len: sym.deps.len(),
        });
    }
    let deps: Vec<String> = sym.deps.iter().map(|d| normalize_name(d)).collect();
    let canon_args = match args {
        None => None,
        Some(a) => {
            if a.len() != deps.len() {
                return Err(ExprError::ArityMismatch {
                    name: sym.name.clone(),
                    given: a.len(),
                    expected: deps.len(),
                });
            }
            let rf: Vec<RatFunc> = a.iter().map(expr_to_ratfunc).collect::<Result<_, _>>()?;
            // Application to the formal dependencies collapses to the
            // canonical bare form.
            let formal = deps
                .iter()
                .zip(&rf)
                .all(|(d, r)| *r == RatFunc::from_atom(Atom::Var(d.clone())));
            if formal {
                None
            } else {
                Some(rf)
            }
        }
    };
    Ok(RatFunc::from_atom(Atom::Func(FuncAtom {
        name: normalize_name(&sym.name),
        deps,
        index: index.to_vec(),
        args: canon_args,
    })))
}

pub fn ratfunc_to_expr(r: &RatFunc) -> Expr {
    if r.is_zero() {
        return Expr::zero();
    }
    let num = poly_to_expr(r.num());
    if r.den().is_one() {
        return num;
    }
    let mut factors = Vec::new();
    if !r.num().is_one() {
        factors.push(num);
    }
    factors.extend(den_factors(r.den()));
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Prod(factors)
    }
}

/// Denominator rendered as negative-power factors: a single monomial
/// denominator splits into atom powers, anything else inverts as one sum.
fn den_factors(den: &Poly) -> Vec<Expr> {
    if den.terms.len() == 1 {
        let (m, c) = den.terms.iter().next().unwrap();
        debug_assert!(c.is_one(), "den leading coefficient normalized to 1");
        debug_assert!(m.exparg.is_none(), "den leading monomial exp-free");
        return m
            .powers
            .iter()
            .map(|(a, &k)| Expr::Pow(Box::new(atom_to_expr(a)), -(k as i64)))
            .collect();
    }
    vec![Expr::Pow(Box::new(poly_to_expr(den)), -1)]
}

pub fn poly_to_expr(p: &Poly) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    // Leading monomial first.
    let mut terms: Vec<Expr> = Vec::with_capacity(p.terms.len());
    for (m, c) in p.terms.iter().rev() {
        terms.push(term_to_expr(m, c));
    }
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        Expr::Sum(terms)
    }
}

fn coef_to_expr(c: &Coef) -> Expr {
    if c.is_integer() {
        Expr::Int(c.to_integer())
    } else {
        Expr::Rat(c.clone())
    }
}

fn term_to_expr(m: &Monomial, c: &Coef) -> Expr {
    let mut factors = Vec::new();
    if !c.is_one() || m.is_one() {
        factors.push(coef_to_expr(c));
    }
    for (a, &k) in &m.powers {
        let base = atom_to_expr(a);
        factors.push(if k == 1 {
            base
        } else {
            Expr::Pow(Box::new(base), k as i64)
        });
    }
    if let Some(g) = &m.exparg {
        factors.push(Expr::Exp(Box::new(ratfunc_to_expr(g))));
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Prod(factors)
    }
}

pub fn atom_to_expr(a: &Atom) -> Expr {
    match a {
        Atom::Var(v) => Expr::Var(v.clone()),
        Atom::Jet(j) => Expr::Jet { dy: j.dy, dz: j.dz },
        Atom::Func(f) => Expr::Func {
            sym: FunctionSymbol {
                name: f.name.clone(),
                deps: f.deps.clone(),
            },
            index: f.index.clone(),
            args: f
                .args
                .as_ref()
                .map(|v| v.iter().map(ratfunc_to_expr).collect()),
        },
        Atom::Log(g) => Expr::Log(Box::new(ratfunc_to_expr(g))),
    }
}

/// Convenience used across the crate: canonicalize, erroring out loudly.
pub fn canon(e: &Expr) -> Result<RatFunc, ExprError> {
    expr_to_ratfunc(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplify_polynomial_identity() {
        // (y+z)^2 - y^2 - 2yz - z^2 == 0
        let y = Expr::var("y");
        let z = Expr::var("z");
        let e = Expr::pow(y.clone() + z.clone(), 2)
            - Expr::pow(y.clone(), 2)
            - Expr::int(2) * y * z.clone()
            - Expr::pow(z, 2);
        assert_eq!(e.simplify().unwrap(), Expr::zero());
    }

    #[test]
    fn simplify_exp_product() {
        let u = Expr::var("u");
        let e = Expr::exp(u.clone()) * Expr::exp(-u);
        assert_eq!(e.simplify().unwrap(), Expr::one());
    }

    #[test]
    fn simplify_is_idempotent() {
        let y = Expr::var("y");
        let z = Expr::var("z");
        let e = (y.clone() + z.clone()) / (y.clone() * z.clone() + Expr::pow(z, 2));
        let s1 = e.simplify().unwrap();
        let s2 = s1.simplify().unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn rational_constants_lowest_terms() {
        let e = Expr::ratio(4, 6);
        let s = e.simplify().unwrap();
        assert_eq!(s, Expr::ratio(2, 3));
    }

    #[test]
    fn division_by_zero_reported() {
        let e = Expr::one() / Expr::zero();
        assert!(e.simplify().is_err());
    }
}
