//! Multiplicative generators of the canonical polynomial ring.
//!
//! The normal form treats every expression as a rational function whose
//! numerator and denominator are polynomials in *atoms*: plain variables,
//! jet variables `u_y, u_z, u_yy, ...`, opaque function applications such as
//! `K_uz`, and opaque logarithms. Exponentials are deliberately *not* atoms;
//! they live on the monomial itself (see [`super::poly::Monomial`]) so that
//! `exp(a)*exp(b)` contracts to `exp(a+b)` structurally.

use std::fmt;

use super::ratfunc::RatFunc;

/// A jet variable `u_{y^dy z^dz}`. `dy + dz >= 1`; the zeroth jet is the
/// plain variable `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct JetVar {
    pub dy: u8,
    pub dz: u8,
}

impl JetVar {
    pub fn new(dy: u8, dz: u8) -> Self {
        debug_assert!(dy as u32 + dz as u32 >= 1, "zeroth jet is the variable u");
        JetVar { dy, dz }
    }

    pub fn order(&self) -> u32 {
        self.dy as u32 + self.dz as u32
    }

    pub fn name(&self) -> String {
        let mut s = String::from("u_");
        for _ in 0..self.dy {
            s.push('y');
        }
        for _ in 0..self.dz {
            s.push('z');
        }
        s
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// An application of an opaque function symbol: name, formal dependency
/// list, derivative multi-index, and (optionally) explicit arguments.
///
/// `args == None` means the function is applied to its formal dependencies,
/// which is the overwhelmingly common case (`K_u` is `K(y,z,u)` with index
/// `(0,0,1)`). Explicit arguments encode composition, e.g. `phi_omega(y/z)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FuncAtom {
    pub name: String,
    pub deps: Vec<String>,
    pub index: Vec<u32>,
    pub args: Option<Vec<RatFunc>>,
}

impl FuncAtom {
    pub fn total_order(&self) -> u32 {
        self.index.iter().sum()
    }

    /// Derivative suffix in the `_yzu` notation, empty for index zero.
    pub fn suffix(&self) -> String {
        let mut steps = String::new();
        for (dep, &k) in self.deps.iter().zip(&self.index) {
            for _ in 0..k {
                steps.push_str(dep);
            }
        }
        if steps.is_empty() {
            steps
        } else {
            format!("_{steps}")
        }
    }
}

/// An irreducible multiplicative generator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    /// A plain variable (`y`, `z`, `u`, `omega`, free constants ...).
    Var(String),
    /// A jet variable of the dependent variable `u`.
    Jet(JetVar),
    /// An opaque function application.
    Func(FuncAtom),
    /// An opaque logarithm.
    Log(Box<RatFunc>),
}

impl Atom {
    pub fn var(name: &str) -> Self {
        Atom::Var(name.to_string())
    }

    pub fn jet(dy: u8, dz: u8) -> Self {
        Atom::Jet(JetVar::new(dy, dz))
    }
}
