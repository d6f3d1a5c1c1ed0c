//! Classical (unconditional) Lie invariance check and the light-cone
//! change of variables.

use crate::expr::canon::{canon, ratfunc_to_expr};

use crate::expr::ratfunc::RatFunc;
use crate::expr::{Bindings, Expr};
use crate::jet::{prolong, ConditionalOperator};
use crate::report::{CheckItem, Verdict, VerificationReport};

use super::{DetsysError, VerifyOptions};

/// Classical Lie invariance of `u_yz = f` under `Q`: the prolonged action
/// on `u_yz - f`, restricted only by `u_yz = f` itself, must vanish
/// identically in the remaining jet variables. Each jet-monomial
/// coefficient is tested separately.
pub fn lie_invariance_check(
    op: &ConditionalOperator,
    f: &Expr,
    opts: &VerifyOptions,
) -> Result<VerificationReport, DetsysError> {
    let pr = prolong(op)?;
    let qf =
        (op.a.clone() * f.diff("y")? + op.b.clone() * f.diff("z")? + op.c.clone() * f.diff("u")?)
            .simplify()?;
    let e = (pr.eta_yz - qf).simplify()?;
    let restricted = e
        .substitute(&Bindings::new().jet(1, 1, f.clone()))
        .map_err(|err| DetsysError::Subst(err.to_string()))?;

    let r = canon(&restricted)?;
    // Collect over every jet atom still present.
    let jet_atoms: Vec<crate::expr::atom::Atom> = r
        .atoms()
        .into_iter()
        .filter(|a| matches!(a, crate::expr::atom::Atom::Jet(_)))
        .collect();

    let mut items = Vec::new();
    if jet_atoms.is_empty() {
        let outcome = opts.zero_test.verdict(&restricted, &Bindings::new())?;
        items.push(CheckItem {
            label: "coefficient of 1".into(),
            origin: Some("1".into()),
            verdict: Verdict::from_outcome(&outcome, &restricted),
            max_numeric_residual: outcome.max_abs,
            tolerance: outcome.max_abs.map(|_| opts.zero_test.tolerance),
        });
    } else {
        let den = RatFunc::from_poly(r.den().clone());
        for (key, coeff) in r.num().collect_by_atoms(&jet_atoms) {
            let coeff_rf = RatFunc::from_poly(coeff)
                .div(&den)
                .map_err(|e| DetsysError::Expr(crate::expr::ExprError::Arith(e)))?;
            let coeff_expr = ratfunc_to_expr(&coeff_rf);
            let monomial = monomial_label(&jet_atoms, &key);
            let outcome = opts.zero_test.verdict(&coeff_expr, &Bindings::new())?;
            items.push(CheckItem {
                label: format!("coefficient of {monomial}"),
                origin: Some(monomial),
                verdict: Verdict::from_outcome(&outcome, &coeff_expr),
                max_numeric_residual: outcome.max_abs,
                tolerance: outcome.max_abs.map(|_| opts.zero_test.tolerance),
            });
        }
    }
    Ok(VerificationReport::from_items(items))
}

fn monomial_label(atoms: &[crate::expr::atom::Atom], key: &[u32]) -> String {
    let mut parts = Vec::new();
    for (a, &k) in atoms.iter().zip(key) {
        if k == 0 {
            continue;
        }
        let name = match a {
            crate::expr::atom::Atom::Jet(j) => j.name(),
            other => format!("{other:?}"),
        };
        if k == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{name}^{k}"));
        }
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

/// Direction of the light-cone transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformDirection {
    /// `F(t,x,u)` to `f(y,z,u)` with `y = t + x`, `z = t - x`, so that
    /// `u_tt - u_xx = F` becomes `u_yz = f = F/4`.
    Forward,
    /// The exact round trip back.
    Inverse,
}

/// Change of variables between `u_tt - u_xx = F(t,x,u)` and the light-cone
/// form `u_yz = f(y,z,u)`. Convention: `y = t + x`, `z = t - x`, hence
/// `u_tt - u_xx = 4 u_yz` and `f = F(t -> (y+z)/2, x -> (y-z)/2) / 4`.
pub fn lightcone_transform(e: &Expr, direction: TransformDirection) -> Result<Expr, DetsysError> {
    match direction {
        TransformDirection::Forward => {
            let half = Expr::ratio(1, 2);
            let b = Bindings::new()
                .var(
                    "t",
                    (half.clone() * (Expr::var("y") + Expr::var("z"))).simplify()?,
                )
                .var("x", (half * (Expr::var("y") - Expr::var("z"))).simplify()?);
            let moved = e
                .substitute(&b)
                .map_err(|err| DetsysError::Subst(err.to_string()))?;
            Ok((moved * Expr::ratio(1, 4)).simplify()?)
        }
        TransformDirection::Inverse => {
            let b = Bindings::new()
                .var("y", (Expr::var("t") + Expr::var("x")).simplify()?)
                .var("z", (Expr::var("t") - Expr::var("x")).simplify()?);
            let moved = e
                .substitute(&b)
                .map_err(|err| DetsysError::Subst(err.to_string()))?;
            Ok((moved * Expr::int(4)).simplify()?)
        }
    }
}
