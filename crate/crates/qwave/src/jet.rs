//! Second-order jet-space machinery.
//!
//! Jet variables `u_y, u_z, u_yy, u_yz, u_zz` (third order transiently) are
//! independent coordinates; total derivatives `D_y`, `D_z` chain through
//! `u` and shift jets up by one order. The prolongation of an operator
//! `Q = a d_y + b d_z + c d_u` follows the characteristic formula
//! `eta^J = D_J(c - a u_y - b u_z) + a u_{J,y} + b u_{J,z}`, and constraint
//! elimination rewrites jets using the invariant surface condition
//! `Qu = 0`, its first total derivatives, and the equation `u_yz = f`.

use crate::expr::atom::JetVar;
use crate::expr::canon::{canon, ratfunc_to_expr};
use crate::expr::deriv::{derive, LeafRule};
use crate::expr::ratfunc::RatFunc;
use crate::expr::{Bindings, Expr, ExprError};

/// Direction of a total derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Y,
    Z,
}

struct TotalRule(Direction);

impl LeafRule for TotalRule {
    fn var(&self, name: &str) -> RatFunc {
        match (name, self.0) {
            ("y", Direction::Y) | ("z", Direction::Z) => RatFunc::one(),
            ("u", Direction::Y) => RatFunc::from_atom(crate::expr::atom::Atom::jet(1, 0)),
            ("u", Direction::Z) => RatFunc::from_atom(crate::expr::atom::Atom::jet(0, 1)),
            _ => RatFunc::zero(),
        }
    }

    fn jet(&self, j: &JetVar) -> Result<RatFunc, ExprError> {
        let (dy, dz) = match self.0 {
            Direction::Y => (j.dy.checked_add(1), Some(j.dz)),
            Direction::Z => (Some(j.dy), j.dz.checked_add(1)),
        };
        match (dy, dz) {
            (Some(dy), Some(dz)) => Ok(RatFunc::from_atom(crate::expr::atom::Atom::jet(dy, dz))),
            _ => Err(ExprError::JetOrderOverflow),
        }
    }
}

/// Total derivative `D_y` or `D_z`.
pub fn total_derivative(e: &Expr, dir: Direction) -> Result<Expr, ExprError> {
    let r = canon(e)?;
    Ok(ratfunc_to_expr(&derive(&r, &TotalRule(dir))?))
}

fn total_derivative_rf(r: &RatFunc, dir: Direction) -> Result<RatFunc, ExprError> {
    derive(r, &TotalRule(dir))
}

/// Canonical-form tag of a conditional operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum OperatorForm {
    /// Arbitrary coefficients `a, b, c`.
    General,
    /// `Q = d_y + K d_z + L d_u`, condition `u_y + K u_z = L`.
    ANonzero,
    /// `Q = d_z + L d_u`, condition `u_z = L`.
    AZero,
}

/// The operator `Q = a d_y + b d_z + c d_u` with coefficients depending on
/// `(y, z, u)` only.
#[derive(Clone, Debug)]
pub struct ConditionalOperator {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub form: OperatorForm,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("operator coefficients must depend on (y, z, u) only; found jet variables")]
    JetInCoefficient,
    #[error("third-order jets failed to cancel: prolongation inconsistency")]
    ProlongationInconsistency,
    #[error("the constraints do not determine {0}")]
    NotDetermined(String),
    #[error("substitution failed: {0}")]
    Subst(String),
}

impl ConditionalOperator {
    pub fn general(a: Expr, b: Expr, c: Expr) -> Result<Self, JetError> {
        for e in [&a, &b, &c] {
            if e.has_jets() {
                return Err(JetError::JetInCoefficient);
            }
        }
        Ok(ConditionalOperator {
            a,
            b,
            c,
            form: OperatorForm::General,
        })
    }

    /// Canonical `a != 0` form `Q = d_y + K d_z + L d_u`.
    pub fn canonical_kl(k: Expr, l: Expr) -> Result<Self, JetError> {
        let op = Self::general(Expr::one(), k, l)?;
        Ok(ConditionalOperator {
            form: OperatorForm::ANonzero,
            ..op
        })
    }

    /// Canonical `a = 0` form `Q = d_z + L d_u`.
    pub fn canonical_a0(l: Expr) -> Result<Self, JetError> {
        let op = Self::general(Expr::zero(), Expr::one(), l)?;
        Ok(ConditionalOperator {
            form: OperatorForm::AZero,
            ..op
        })
    }

    /// The characteristic `c - a u_y - b u_z`.
    pub fn characteristic(&self) -> Result<Expr, JetError> {
        let e =
            self.c.clone() - self.a.clone() * Expr::jet(1, 0) - self.b.clone() * Expr::jet(0, 1);
        e.simplify().map_err(JetError::Expr)
    }

    /// The invariant surface condition `Qu = 0` as `a u_y + b u_z - c`.
    pub fn surface_condition(&self) -> Result<Expr, JetError> {
        (-self.characteristic()?).simplify().map_err(JetError::Expr)
    }

    /// Apply `Q` to a jet expression (first-order action on point
    /// functions and jets through the prolonged coefficients is *not*
    /// implied; this is the raw vector field on `(y, z, u)`).
    pub fn apply(&self, e: &Expr) -> Result<Expr, JetError> {
        let dy = e.diff("y")?;
        let dz = e.diff("z")?;
        let du = e.diff("u")?;
        Ok((self.a.clone() * dy + self.b.clone() * dz + self.c.clone() * du).simplify()?)
    }
}

/// Second prolongation coefficients of `Q`.
#[derive(Clone, Debug)]
pub struct Prolongation {
    pub eta: Expr,
    pub eta_y: Expr,
    pub eta_z: Expr,
    pub eta_yy: Expr,
    pub eta_yz: Expr,
    pub eta_zz: Expr,
}

/// Second-order prolongation by the characteristic formula. Third-order
/// jets cancel identically for point operators; the cancellation is
/// asserted, not assumed.
pub fn prolong(op: &ConditionalOperator) -> Result<Prolongation, JetError> {
    let w = canon(&op.characteristic()?)?;
    let a = canon(&op.a)?;
    let b = canon(&op.b)?;

    let dy = |r: &RatFunc| total_derivative_rf(r, Direction::Y);
    let dz = |r: &RatFunc| total_derivative_rf(r, Direction::Z);

    let wy = dy(&w)?;
    let wz = dz(&w)?;
    let wyy = dy(&wy)?;
    let wyz = dz(&wy)?;
    let wzz = dz(&wz)?;

    let jet = |dyo: u8, dzo: u8| RatFunc::from_atom(crate::expr::atom::Atom::jet(dyo, dzo));

    let eta_y = wy.add(&a.mul(&jet(2, 0))).add(&b.mul(&jet(1, 1)));
    let eta_z = wz.add(&a.mul(&jet(1, 1))).add(&b.mul(&jet(0, 2)));
    let eta_yy = wyy.add(&a.mul(&jet(3, 0))).add(&b.mul(&jet(2, 1)));
    let eta_yz = wyz.add(&a.mul(&jet(2, 1))).add(&b.mul(&jet(1, 2)));
    let eta_zz = wzz.add(&a.mul(&jet(1, 2))).add(&b.mul(&jet(0, 3)));

    let prolongation = Prolongation {
        eta: op.c.simplify()?,
        eta_y: ratfunc_to_expr(&eta_y),
        eta_z: ratfunc_to_expr(&eta_z),
        eta_yy: ratfunc_to_expr(&eta_yy),
        eta_yz: ratfunc_to_expr(&eta_yz),
        eta_zz: ratfunc_to_expr(&eta_zz),
    };
    for e in [
        &prolongation.eta_yy,
        &prolongation.eta_yz,
        &prolongation.eta_zz,
    ] {
        if max_jet_order(e) > 2 {
            return Err(JetError::ProlongationInconsistency);
        }
    }
    Ok(prolongation)
}

/// Highest jet order appearing in an expression.
pub fn max_jet_order(e: &Expr) -> u32 {
    match e {
        Expr::Jet { dy, dz } => *dy as u32 + *dz as u32,
        Expr::Func { args: Some(a), .. } => a.iter().map(max_jet_order).max().unwrap_or(0),
        Expr::Sum(v) | Expr::Prod(v) => v.iter().map(max_jet_order).max().unwrap_or(0),
        Expr::Pow(b, _) => max_jet_order(b),
        Expr::Exp(b) | Expr::Log(b) => max_jet_order(b),
        _ => 0,
    }
}

/// Substitution rules realizing the constraint manifold of `Qu = 0`, its
/// first total derivatives, and the equation `u_yz = f`.
///
/// For the `a != 0` canonical form the rules rewrite `u_y`, `u_yy`, `u_yz`,
/// leaving `{u, u_z, u_zz}` free; `u_zz` is then determined by a relation
/// linear in `u_zz` (coefficient `-K`) available via [`Eliminator::uzz_rule`].
/// For the `a = 0` canonical form the rules rewrite `u_z`, `u_zz`, `u_yz`,
/// leaving `{u, u_y, u_yy}` free.
pub struct Eliminator {
    rules: Bindings,
    uzz: Option<Expr>,
}

impl Eliminator {
    pub fn new(op: &ConditionalOperator, f: &Expr) -> Result<Self, JetError> {
        match op.form {
            OperatorForm::ANonzero => Self::a_nonzero(&op.b, &op.c, f),
            OperatorForm::AZero => Self::a_zero(&op.c, f),
            OperatorForm::General => Err(JetError::NotDetermined(
                "elimination requires a canonical form".into(),
            )),
        }
    }

    fn a_nonzero(k: &Expr, l: &Expr, f: &Expr) -> Result<Self, JetError> {
        // u_y = L - K u_z
        let r_uy = (l.clone() - k.clone() * Expr::jet(0, 1)).simplify()?;
        // u_yz = D_z(L - K u_z): contains u_z, u_zz
        let r_uyz = total_derivative(&r_uy, Direction::Z)?;
        // u_yy = D_y(L - K u_z) with u_y and u_yz folded back in
        let d_y = total_derivative(&r_uy, Direction::Y)?;
        let fold = Bindings::new().jet(1, 0, r_uy.clone()).jet(1, 1, f.clone());
        let r_uyy = d_y
            .substitute(&fold)
            .map_err(|e| JetError::Subst(e.to_string()))?;

        // The u_zz relation: D_z-consequence combined with u_yz = f is
        // linear in u_zz with coefficient -K.
        let relation = (r_uyz.clone() - f.clone()).simplify()?;
        let uzz = solve_linear_jet(&relation, 0, 2)?;

        let rules = Bindings::new()
            .jet(1, 0, r_uy)
            .jet(2, 0, r_uyy)
            .jet(1, 1, r_uyz);
        Ok(Eliminator {
            rules,
            uzz: Some(uzz),
        })
    }

    fn a_zero(l: &Expr, f: &Expr) -> Result<Self, JetError> {
        // u_z = L
        let r_uz = l.simplify()?;
        // u_zz = D_z(L) with u_z -> L
        let d_z = total_derivative(&r_uz, Direction::Z)?;
        let fold = Bindings::new().jet(0, 1, r_uz.clone());
        let r_uzz = d_z
            .substitute(&fold)
            .map_err(|e| JetError::Subst(e.to_string()))?;
        let rules = Bindings::new()
            .jet(0, 1, r_uz)
            .jet(0, 2, r_uzz)
            .jet(1, 1, f.clone());
        Ok(Eliminator { rules, uzz: None })
    }

    /// Apply the elimination rules once (they are closed, so once is
    /// enough and the operation is idempotent).
    pub fn eliminate(&self, e: &Expr) -> Result<Expr, JetError> {
        e.substitute(&self.rules)
            .map_err(|err| JetError::Subst(err.to_string()))
    }

    /// The determined `u_zz` for the `a != 0` form.
    pub fn uzz_rule(&self) -> Result<&Expr, JetError> {
        self.uzz
            .as_ref()
            .ok_or_else(|| JetError::NotDetermined("u_zz".into()))
    }

    /// Eliminate and then substitute the determined `u_zz`.
    pub fn eliminate_with_uzz(&self, e: &Expr) -> Result<Expr, JetError> {
        let stage1 = self.eliminate(e)?;
        let uzz = self.uzz_rule()?;
        stage1
            .substitute(&Bindings::new().jet(0, 2, uzz.clone()))
            .map_err(|err| JetError::Subst(err.to_string()))
    }
}

/// Solve `relation == 0` for the jet `u_{dy,dz}`, requiring linearity with
/// a nonzero coefficient.
fn solve_linear_jet(relation: &Expr, dy: u8, dz: u8) -> Result<Expr, JetError> {
    let r = canon(relation).map_err(JetError::Expr)?;
    let target = crate::expr::atom::Atom::jet(dy, dz);
    let grouped = r.num().collect_by_atoms(std::slice::from_ref(&target));
    let mut coeff = crate::expr::poly::Poly::zero();
    let mut rest = crate::expr::poly::Poly::zero();
    for (key, p) in grouped {
        match key[0] {
            0 => rest = rest.add(&p),
            1 => coeff = coeff.add(&p),
            _ => {
                return Err(JetError::NotDetermined(format!(
                    "u_{} (relation not linear)",
                    JetVar::new(dy, dz)
                )))
            }
        }
    }
    if coeff.is_zero() {
        return Err(JetError::NotDetermined(format!("{}", JetVar::new(dy, dz))));
    }
    // The denominator of `relation` is nonzero, so solving the numerator
    // suffices: coeff * u + rest = 0.
    let sol = RatFunc::from_poly(rest.neg())
        .div(&RatFunc::from_poly(coeff))
        .map_err(|e| JetError::Expr(ExprError::Arith(e)))?;
    Ok(ratfunc_to_expr(&sol))
}
