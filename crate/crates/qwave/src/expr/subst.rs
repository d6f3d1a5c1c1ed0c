//! Substitution of variables, function symbols and jet variables.

use std::collections::BTreeMap;

use super::atom::{Atom, FuncAtom};
use super::canon::{canon, log_of, ratfunc_to_expr};
use super::deriv::diff_multi;
use super::poly::Poly;
use super::ratfunc::RatFunc;
use super::{Expr, ExprError};

/// A binding for an opaque function symbol: the declared dependency list
/// and the replacement body written in those dependencies.
#[derive(Clone, Debug)]
pub struct FuncBinding {
    pub deps: Vec<String>,
    pub body: Expr,
}

/// Substitution map. Replacements apply in a single simultaneous pass;
/// replacement bodies are not themselves re-substituted.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    pub vars: BTreeMap<String, Expr>,
    pub funcs: BTreeMap<String, FuncBinding>,
    pub jets: BTreeMap<(u8, u8), Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("binding for {name} declares dependencies ({bound}) but the expression uses ({used})")]
    DependencyMismatch {
        name: String,
        bound: String,
        used: String,
    },
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn var(mut self, name: &str, e: Expr) -> Self {
        self.vars.insert(super::canon::normalize_name(name), e);
        self
    }

    pub fn func(mut self, name: &str, deps: &[&str], body: Expr) -> Self {
        self.funcs.insert(
            super::canon::normalize_name(name),
            FuncBinding {
                deps: deps
                    .iter()
                    .map(|d| super::canon::normalize_name(d))
                    .collect(),
                body,
            },
        );
        self
    }

    pub fn jet(mut self, dy: u8, dz: u8, e: Expr) -> Self {
        self.jets.insert((dy, dz), e);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.funcs.is_empty() && self.jets.is_empty()
    }
}

pub fn subst_ratfunc(r: &RatFunc, b: &Bindings) -> Result<RatFunc, SubstError> {
    let num = subst_poly(r.num(), b)?;
    let den = subst_poly(r.den(), b)?;
    num.div(&den)
        .map_err(|e| SubstError::Expr(ExprError::Arith(e)))
}

fn subst_poly(p: &Poly, b: &Bindings) -> Result<RatFunc, SubstError> {
    let mut acc = RatFunc::zero();
    for (m, c) in &p.terms {
        let mut term = RatFunc::constant(c.clone());
        for (a, &k) in &m.powers {
            let repl = subst_atom(a, b)?;
            term = term.mul(&repl.powi(k as i64).map_err(ExprError::Arith)?);
        }
        if let Some(g) = &m.exparg {
            let g2 = subst_ratfunc(g, b)?;
            term = term.mul(&RatFunc::exp_of(g2));
        }
        acc = acc.add(&term);
    }
    Ok(acc)
}

fn subst_atom(a: &Atom, b: &Bindings) -> Result<RatFunc, SubstError> {
    match a {
        Atom::Var(v) => match b.vars.get(v) {
            Some(e) => canon(e).map_err(SubstError::Expr),
            None => Ok(RatFunc::from_atom(a.clone())),
        },
        Atom::Jet(j) => match b.jets.get(&(j.dy, j.dz)) {
            Some(e) => canon(e).map_err(SubstError::Expr),
            None => Ok(RatFunc::from_atom(a.clone())),
        },
        Atom::Log(g) => {
            let g2 = subst_ratfunc(g, b)?;
            Ok(log_of(g2))
        }
        Atom::Func(f) => subst_func(f, b),
    }
}

fn subst_func(f: &FuncAtom, b: &Bindings) -> Result<RatFunc, SubstError> {
    // Substituted arguments (explicit composition only).
    let new_args = match &f.args {
        None => None,
        Some(args) => Some(
            args.iter()
                .map(|a| subst_ratfunc(a, b))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };

    let Some(binding) = b.funcs.get(&f.name) else {
        // Function stays opaque. If formal dependencies are themselves
        // substituted, the application becomes explicit composition.
        let args = match new_args {
            Some(a) => Some(a),
            None => {
                if f.deps.iter().any(|d| b.vars.contains_key(d)) {
                    Some(
                        f.deps
                            .iter()
                            .map(|d| subst_atom(&Atom::Var(d.clone()), b))
                            .collect::<Result<Vec<_>, _>>()?,
                    )
                } else {
                    None
                }
            }
        };
        return Ok(RatFunc::from_atom(Atom::Func(FuncAtom {
            name: f.name.clone(),
            deps: f.deps.clone(),
            index: f.index.clone(),
            args,
        })));
    };

    if binding.deps != f.deps {
        return Err(SubstError::DependencyMismatch {
            name: f.name.clone(),
            bound: binding.deps.join(","),
            used: f.deps.join(","),
        });
    }

    // Differentiate the body along the multi-index, then apply arguments.
    let body = canon(&binding.body).map_err(SubstError::Expr)?;
    let derived = diff_multi(&body, &f.deps, &f.index).map_err(SubstError::Expr)?;
    match new_args {
        None => Ok(derived),
        Some(args) => {
            let mut inner = Bindings::new();
            for (d, arg) in f.deps.iter().zip(args) {
                inner.vars.insert(d.clone(), ratfunc_to_expr(&arg));
            }
            subst_ratfunc(&derived, &inner)
        }
    }
}
