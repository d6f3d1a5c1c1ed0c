//! Compilation of closed expressions to fast `f64` evaluators.
//!
//! The symbolic evaluator re-walks exact rationals on every call; grid
//! residual checks evaluate millions of points, so expressions are lowered
//! once into a small instruction tree over `f64` constants.

use num_traits::ToPrimitive;

use crate::expr::atom::Atom;
use crate::expr::canon::canon;
use crate::expr::poly::Poly;
use crate::expr::ratfunc::RatFunc;
use crate::expr::Expr;

use super::NumericError;

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Vec<Node>),
    Mul(Vec<Node>),
    Pow(Box<Node>, i32),
    Exp(Box<Node>),
    Ln(Box<Node>),
    Div(Box<Node>, Box<Node>),
}

/// A compiled expression over a fixed variable ordering.
#[derive(Clone, Debug)]
pub struct Compiled {
    vars: Vec<String>,
    node: Node,
}

impl Compiled {
    /// Compile; every atom must be a variable from `vars`.
    pub fn new(e: &Expr, vars: &[&str]) -> Result<Compiled, NumericError> {
        let r = canon(e).map_err(|err| NumericError::Symbolic(err.to_string()))?;
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let node = lower_ratfunc(&r, &vars)?;
        Ok(Compiled { vars, node })
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn eval(&self, args: &[f64]) -> Result<f64, NumericError> {
        debug_assert_eq!(args.len(), self.vars.len());
        let v = eval_node(&self.node, args)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericError::NonFinite)
        }
    }
}

fn eval_node(n: &Node, args: &[f64]) -> Result<f64, NumericError> {
    Ok(match n {
        Node::Const(c) => *c,
        Node::Var(i) => args[*i],
        Node::Add(items) => {
            let mut acc = 0.0;
            for it in items {
                acc += eval_node(it, args)?;
            }
            acc
        }
        Node::Mul(items) => {
            let mut acc = 1.0;
            for it in items {
                acc *= eval_node(it, args)?;
            }
            acc
        }
        Node::Pow(b, k) => eval_node(b, args)?.powi(*k),
        Node::Exp(b) => eval_node(b, args)?.exp(),
        Node::Ln(b) => {
            let v = eval_node(b, args)?;
            if v <= 0.0 {
                return Err(NumericError::LogDomain);
            }
            v.ln()
        }
        Node::Div(num, den) => {
            let d = eval_node(den, args)?;
            if d.abs() < crate::expr::eval::POLE_THRESHOLD {
                return Err(NumericError::Pole);
            }
            eval_node(num, args)? / d
        }
    })
}

fn lower_ratfunc(r: &RatFunc, vars: &[String]) -> Result<Node, NumericError> {
    let num = lower_poly(r.num(), vars)?;
    if r.den().is_one() {
        return Ok(num);
    }
    let den = lower_poly(r.den(), vars)?;
    Ok(Node::Div(Box::new(num), Box::new(den)))
}

fn lower_poly(p: &Poly, vars: &[String]) -> Result<Node, NumericError> {
    if p.is_zero() {
        return Ok(Node::Const(0.0));
    }
    let mut terms = Vec::with_capacity(p.terms.len());
    for (m, c) in &p.terms {
        let mut factors = Vec::new();
        let cf = c.to_f64().ok_or(NumericError::NonFinite)?;
        if cf != 1.0 || (m.powers.is_empty() && m.exparg.is_none()) {
            factors.push(Node::Const(cf));
        }
        for (a, &k) in &m.powers {
            let base = lower_atom(a, vars)?;
            factors.push(if k == 1 {
                base
            } else {
                Node::Pow(Box::new(base), k as i32)
            });
        }
        if let Some(g) = &m.exparg {
            factors.push(Node::Exp(Box::new(lower_ratfunc(g, vars)?)));
        }
        terms.push(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Node::Mul(factors)
        });
    }
    Ok(if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        Node::Add(terms)
    })
}

fn lower_atom(a: &Atom, vars: &[String]) -> Result<Node, NumericError> {
    match a {
        Atom::Var(v) => vars
            .iter()
            .position(|w| w == v)
            .map(Node::Var)
            .ok_or_else(|| NumericError::UnboundSymbol(v.clone())),
        Atom::Log(g) => Ok(Node::Ln(Box::new(lower_ratfunc(g, vars)?))),
        Atom::Jet(j) => Err(NumericError::UnboundSymbol(j.name())),
        Atom::Func(f) => Err(NumericError::UnboundSymbol(f.name.clone())),
    }
}
