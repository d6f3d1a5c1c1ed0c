//! Minimal computer-algebra kernel.
//!
//! Expressions are immutable trees over variables, exact rational numbers,
//! opaque function applications with derivative multi-indices, sums,
//! products, integer powers, `exp` and `log`. The canonical form is a
//! normalized rational function (one expanded numerator over one expanded
//! denominator, monomial-sorted); `exp` is an opaque generator with the
//! contraction `exp(a)*exp(b) = exp(a+b)`.
//!
//! The kernel deliberately stops short of general CAS features: no
//! integration, no factorization, no Grobner bases. Everything the rest of
//! the crate needs is rational-function arithmetic, differentiation,
//! substitution and an exact zero test over this ring.

pub mod atom;
pub mod canon;
pub mod deriv;
pub mod eval;
pub mod gcd;
pub mod parse;
pub mod poly;
pub mod print;
pub mod ratfunc;
pub mod subst;
pub mod zero;

use num_bigint::BigInt;
use num_rational::BigRational;

pub use atom::{Atom, FuncAtom, JetVar};
pub use parse::{parse, DeclTable, ParseError};
pub use ratfunc::{ArithError, RatFunc};
pub use subst::{Bindings, SubstError};
pub use zero::{ZeroTest, ZeroVerdict};

/// An opaque function symbol: a name plus its ordered dependency list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FunctionSymbol {
    pub name: String,
    pub deps: Vec<String>,
}

impl FunctionSymbol {
    pub fn new(name: &str, deps: &[&str]) -> Self {
        FunctionSymbol {
            name: name.to_string(),
            deps: deps.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// An immutable symbolic expression tree.
///
/// Public operations (`simplify`, `diff`, `substitute`, ...) always return
/// trees in canonical form; arbitrary trees built by hand are legal inputs
/// and are canonicalized on the way in.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Expr {
    Int(BigInt),
    Rat(BigRational),
    Var(String),
    /// Jet variable of the dependent variable `u` (`dy + dz >= 1`).
    Jet {
        dy: u8,
        dz: u8,
    },
    Func {
        sym: FunctionSymbol,
        /// Derivative multi-index, one entry per dependency.
        index: Vec<u32>,
        /// Explicit arguments (composition); `None` = formal dependencies.
        args: Option<Vec<Expr>>,
    },
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Box<Expr>, i64),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

/// Errors from kernel operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("function symbol {name}: multi-index length {index_len} does not match dependency count {dep_len}")]
    IndexMismatch {
        name: String,
        index_len: usize,
        dep_len: usize,
    },
    #[error("function symbol {name}: {given} arguments given, {expected} declared")]
    ArityMismatch {
        name: String,
        given: usize,
        expected: usize,
    },
    #[error("jet order above supported bound")]
    JetOrderOverflow,
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Int(BigInt::from(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        let r = BigRational::new(BigInt::from(n), BigInt::from(d));
        if r.is_integer() {
            Expr::Int(r.to_integer())
        } else {
            Expr::Rat(r)
        }
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn jet(dy: u8, dz: u8) -> Expr {
        Expr::Jet { dy, dz }
    }

    /// Function application to formal dependencies with zero index.
    pub fn func(name: &str, deps: &[&str]) -> Expr {
        let sym = FunctionSymbol::new(name, deps);
        let index = vec![0; deps.len()];
        Expr::Func {
            sym,
            index,
            args: None,
        }
    }

    /// Function application with an explicit derivative multi-index.
    pub fn func_d(name: &str, deps: &[&str], index: &[u32]) -> Expr {
        let sym = FunctionSymbol::new(name, deps);
        Expr::Func {
            sym,
            index: index.to_vec(),
            args: None,
        }
    }

    pub fn exp(e: Expr) -> Expr {
        Expr::Exp(Box::new(e))
    }

    pub fn log(e: Expr) -> Expr {
        Expr::Log(Box::new(e))
    }

    pub fn pow(e: Expr, k: i64) -> Expr {
        Expr::Pow(Box::new(e), k)
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Int(n) if num_traits::Zero::is_zero(n))
    }

    /// Canonical form: expanded rational normal form rendered back to a
    /// tree. Idempotent. Errors only on division by an identically zero
    /// subexpression.
    pub fn simplify(&self) -> Result<Expr, ExprError> {
        Ok(canon::ratfunc_to_expr(&canon::expr_to_ratfunc(self)?))
    }

    /// Partial derivative treating variables as independent; jet variables
    /// and function applications are opaque except through their dependency
    /// lists. Total function, modulo canonicalization errors.
    pub fn diff(&self, var: &str) -> Result<Expr, ExprError> {
        let r = canon::expr_to_ratfunc(self)?;
        Ok(canon::ratfunc_to_expr(&deriv::diff_ratfunc(&r, var)?))
    }

    /// Substitution of variables, function symbols and jet variables; see
    /// [`Bindings`]. Derivative indices on function symbols are applied by
    /// differentiating the replacement.
    pub fn substitute(&self, bindings: &Bindings) -> Result<Expr, SubstError> {
        let r = canon::expr_to_ratfunc(self).map_err(SubstError::Expr)?;
        Ok(canon::ratfunc_to_expr(&subst::subst_ratfunc(&r, bindings)?))
    }

    /// Exact symbolic zero test over the canonical ring.
    pub fn is_zero_symbolic(&self) -> Result<bool, ExprError> {
        Ok(canon::expr_to_ratfunc(self)?.is_zero())
    }

    /// Numeric evaluation after substituting the function bindings.
    pub fn eval_at(
        &self,
        point: &std::collections::BTreeMap<String, f64>,
        fn_bindings: &Bindings,
    ) -> Result<f64, eval::EvalError> {
        let e = if fn_bindings.is_empty() {
            self.clone()
        } else {
            self.substitute(fn_bindings)
                .map_err(eval::EvalError::from_subst)?
        };
        eval::eval_expr(&e, point)
    }

    /// Render in the expression DSL.
    pub fn to_dsl(&self) -> String {
        print::print_expr(self)
    }

    /// All variable names appearing anywhere (including inside function
    /// arguments and exp/log arguments).
    pub fn variables(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        collect_vars(self, &mut out);
        out
    }

    /// Whether the expression mentions the function symbol `name`.
    pub fn mentions_func(&self, name: &str) -> bool {
        match self {
            Expr::Func { sym, args, .. } => {
                sym.name == name
                    || args
                        .as_ref()
                        .map(|a| a.iter().any(|e| e.mentions_func(name)))
                        .unwrap_or(false)
            }
            Expr::Sum(v) | Expr::Prod(v) => v.iter().any(|e| e.mentions_func(name)),
            Expr::Pow(b, _) => b.mentions_func(name),
            Expr::Exp(b) | Expr::Log(b) => b.mentions_func(name),
            _ => false,
        }
    }

    /// Whether any jet variable occurs.
    pub fn has_jets(&self) -> bool {
        match self {
            Expr::Jet { .. } => true,
            Expr::Func { args: Some(a), .. } => a.iter().any(Expr::has_jets),
            Expr::Sum(v) | Expr::Prod(v) => v.iter().any(Expr::has_jets),
            Expr::Pow(b, _) => b.has_jets(),
            Expr::Exp(b) | Expr::Log(b) => b.has_jets(),
            _ => false,
        }
    }
}

fn collect_vars(e: &Expr, out: &mut std::collections::BTreeSet<String>) {
    match e {
        Expr::Var(v) => {
            out.insert(v.clone());
        }
        Expr::Func { sym, args, .. } => match args {
            Some(a) => a.iter().for_each(|x| collect_vars(x, out)),
            None => {
                for d in &sym.deps {
                    out.insert(d.clone());
                }
            }
        },
        Expr::Sum(v) | Expr::Prod(v) => v.iter().for_each(|x| collect_vars(x, out)),
        Expr::Pow(b, _) => collect_vars(b, out),
        Expr::Exp(b) | Expr::Log(b) => collect_vars(b, out),
        _ => {}
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_dsl())
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, Expr::Prod(vec![Expr::int(-1), rhs])])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Prod(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Prod(vec![self, Expr::Pow(Box::new(rhs), -1)])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Prod(vec![Expr::int(-1), self])
    }
}
