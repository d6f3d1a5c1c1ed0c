//! Differentiation over the rational normal form.
//!
//! One engine serves both the partial derivatives of the kernel (variables
//! independent, jets opaque) and the total derivatives of the jet module
//! (`u` and its jets chained through `D_y`, `D_z`); they differ only in the
//! leaf rule applied to variables and jet atoms.

use super::atom::{Atom, FuncAtom, JetVar};
use super::poly::{coef_int, Poly};
use super::ratfunc::RatFunc;
use super::ExprError;

/// Leaf rule: derivative of a variable or jet atom.
pub trait LeafRule {
    fn var(&self, name: &str) -> RatFunc;
    fn jet(&self, j: &JetVar) -> Result<RatFunc, ExprError>;
}

/// Partial derivative with respect to one variable.
pub struct Partial<'a>(pub &'a str);

impl LeafRule for Partial<'_> {
    fn var(&self, name: &str) -> RatFunc {
        if name == self.0 {
            RatFunc::one()
        } else {
            RatFunc::zero()
        }
    }

    fn jet(&self, _j: &JetVar) -> Result<RatFunc, ExprError> {
        // Jet variables are algebraically independent of every variable.
        Ok(RatFunc::zero())
    }
}

pub fn diff_ratfunc(r: &RatFunc, var: &str) -> Result<RatFunc, ExprError> {
    let v = super::canon::normalize_name(var);
    derive(r, &Partial(&v))
}

/// Quotient rule over the normal form. The common factor of the
/// denominator and its derivative is cancelled up front (for `den = g^k`
/// this keeps the result's denominator at `g^(k+1)` instead of `g^(2k)`),
/// which keeps the follow-up gcd cheap.
pub fn derive(r: &RatFunc, rule: &impl LeafRule) -> Result<RatFunc, ExprError> {
    let dn = derive_poly(r.num(), rule)?;
    let dd = derive_poly(r.den(), rule)?;
    if dd.is_zero() {
        // d(num)/den
        let den_rf = RatFunc::from_poly(r.den().clone());
        return Ok(dn.div(&den_rf).expect("den nonzero"));
    }
    let num_rf = RatFunc::from_poly(r.num().clone());
    if dd.den().is_one() {
        let g = crate::expr::gcd::poly_gcd(dd.num(), r.den());
        if !g.is_zero() && !g.is_one() {
            if let (Some(dd1), Some(den1)) = (
                crate::expr::gcd::divide_exact(dd.num(), &g),
                crate::expr::gcd::divide_exact(r.den(), &g),
            ) {
                // d(num/den) = (dn*den1 - num*dd1) / (den*den1)
                let den1_rf = RatFunc::from_poly(den1.clone());
                let numerator = dn.mul(&den1_rf).sub(&num_rf.mul(&RatFunc::from_poly(dd1)));
                let denominator = RatFunc::from_poly(r.den().mul(&den1));
                return numerator.div(&denominator).map_err(ExprError::Arith);
            }
        }
    }
    let den_rf = RatFunc::from_poly(r.den().clone());
    let num_part = dn.mul(&den_rf).sub(&dd.mul(&num_rf));
    num_part.div(&den_rf.mul(&den_rf)).map_err(ExprError::Arith)
}

fn derive_poly(p: &Poly, rule: &impl LeafRule) -> Result<RatFunc, ExprError> {
    let mut acc = RatFunc::zero();
    for (m, c) in &p.terms {
        // Product rule across the atom powers.
        for (a, &k) in &m.powers {
            let da = derive_atom(a, rule)?;
            if da.is_zero() {
                continue;
            }
            let mut rest = m.clone();
            let e = rest.powers.get_mut(a).unwrap();
            if *e == 1 {
                rest.powers.remove(a);
            } else {
                *e -= 1;
            }
            let base = RatFunc::from_poly(Poly::from_monomial(rest, c.clone()));
            acc = acc.add(&base.scale(&coef_int(k as i64)).mul(&da));
        }
        // Chain rule through the exp factor.
        if let Some(g) = &m.exparg {
            let dg = derive(g, rule)?;
            if !dg.is_zero() {
                let base = RatFunc::from_poly(Poly::from_monomial(m.clone(), c.clone()));
                acc = acc.add(&base.mul(&dg));
            }
        }
    }
    Ok(acc)
}

fn derive_atom(a: &Atom, rule: &impl LeafRule) -> Result<RatFunc, ExprError> {
    match a {
        Atom::Var(v) => Ok(rule.var(v)),
        Atom::Jet(j) => rule.jet(j),
        Atom::Func(f) => derive_func(f, rule),
        Atom::Log(g) => {
            let dg = derive(g, rule)?;
            if dg.is_zero() {
                return Ok(RatFunc::zero());
            }
            dg.div(g).map_err(ExprError::Arith)
        }
    }
}

fn derive_func(f: &FuncAtom, rule: &impl LeafRule) -> Result<RatFunc, ExprError> {
    let mut acc = RatFunc::zero();
    for (i, dep) in f.deps.iter().enumerate() {
        // Derivative of the i-th argument.
        let darg = match &f.args {
            None => rule.var(dep),
            Some(args) => derive(&args[i], rule)?,
        };
        if darg.is_zero() {
            continue;
        }
        let mut index = f.index.clone();
        index[i] += 1;
        let bumped = Atom::Func(FuncAtom {
            name: f.name.clone(),
            deps: f.deps.clone(),
            index,
            args: f.args.clone(),
        });
        acc = acc.add(&RatFunc::from_atom(bumped).mul(&darg));
    }
    Ok(acc)
}

/// Iterated partial derivative along a multi-index over the given deps.
pub fn diff_multi(r: &RatFunc, deps: &[String], index: &[u32]) -> Result<RatFunc, ExprError> {
    let mut out = r.clone();
    for (dep, &k) in deps.iter().zip(index) {
        for _ in 0..k {
            out = diff_ratfunc(&out, dep)?;
        }
    }
    Ok(out)
}
