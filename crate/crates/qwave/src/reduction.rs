//! The Case-1 reduction ansatz `u = sigma(y,z) * phi(omega(y,z))`.
//!
//! `omega` and `sigma` satisfy the characteristic equations
//! `T_y omega_z + T_z omega_y = 0` and `T_y sigma_z + T_z sigma_y = sigma T_yz`;
//! substituting the ansatz turns `u_yz = f` into
//! `A0 phi + A1 phi' + A2 phi'' = f` with `A0 = sigma_yz`,
//! `A1 = omega_y sigma_z + omega_z sigma_y + sigma omega_yz`,
//! `A2 = sigma omega_y omega_z`. The equation is an ODE in `omega` exactly
//! when the normalized coefficients collapse to functions of `omega` alone;
//! that collapse is tested, never assumed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::detsys::{ser_expr, ser_opt_expr, DetsysError, VerifyOptions};
use crate::expr::canon::{canon, ratfunc_to_expr};
use crate::expr::poly::Poly;
use crate::expr::ratfunc::RatFunc;
use crate::expr::zero::DEFAULT_SEED;
use crate::expr::{Bindings, Expr};
use crate::numeric::{Box2D, Compiled, DenseSolution, NumericError};
use crate::report::{CheckItem, Verdict, VerificationReport};

#[derive(Debug, thiserror::Error)]
pub enum ReductionError {
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
    #[error(transparent)]
    Detsys(#[from] DetsysError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("omega is constant: the ansatz is degenerate")]
    OmegaConstant,
    #[error("A2 = sigma * omega_y * omega_z is identically zero: omega is constant along one null direction")]
    DegenerateAnsatz,
    #[error("the right side f must not depend on u for the reduction to an ODE")]
    RhsDependsOnU,
    #[error(
        "'omega' is reserved for the invariant variable and cannot appear in reduction inputs"
    )]
    ReservedOmega,
    #[error("substitution failed: {0}")]
    Subst(String),
}

/// Everything the reduction produces for one `(sigma, omega, f)` triple.
#[derive(Clone, Debug, Serialize)]
pub struct ReductionPackage {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<String>,
    #[serde(serialize_with = "ser_expr")]
    pub omega: Expr,
    #[serde(serialize_with = "ser_expr")]
    pub sigma: Expr,
    #[serde(serialize_with = "ser_expr")]
    pub f: Expr,
    /// Coefficient of `phi`.
    #[serde(serialize_with = "ser_expr")]
    pub a0: Expr,
    /// Coefficient of `phi'`.
    #[serde(serialize_with = "ser_expr")]
    pub a1: Expr,
    /// Coefficient of `phi''`.
    #[serde(serialize_with = "ser_expr")]
    pub a2: Expr,
    /// `A1/A2` rewritten in `omega`, when the rewrite succeeds.
    #[serde(serialize_with = "ser_opt_expr")]
    pub p_of_omega: Option<Expr>,
    /// `A0/A2` rewritten in `omega`.
    #[serde(serialize_with = "ser_opt_expr")]
    pub q_of_omega: Option<Expr>,
    /// `f/A2` rewritten in `omega`.
    #[serde(serialize_with = "ser_opt_expr")]
    pub r_of_omega: Option<Expr>,
}

/// Verdict of the reducibility test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Reducibility {
    /// All normalized coefficients rewritten as explicit functions of omega.
    ReducibleSymbolic,
    /// Rewrite failed but the level-set sampling found no dependence beyond
    /// omega.
    ReducibleNumeric,
    /// Some normalized coefficient separates points of an omega level set.
    NotReducible,
}

/// Both characteristic residuals for a candidate `(T, omega, sigma)`.
pub fn check_characteristics(
    t: &Expr,
    omega: &Expr,
    sigma: &Expr,
    opts: &VerifyOptions,
) -> Result<VerificationReport, ReductionError> {
    let t_y = t.diff("y")?;
    let t_z = t.diff("z")?;
    let t_yz = t_y.diff("z")?;
    let r1 = (t_y.clone() * omega.diff("z")? + t_z.clone() * omega.diff("y")?).simplify()?;
    let r2 = (t_y * sigma.diff("z")? + t_z * sigma.diff("y")? - sigma.clone() * t_yz).simplify()?;
    let mut items = Vec::new();
    for (label, r) in [("omega characteristic", &r1), ("sigma characteristic", &r2)] {
        let outcome = opts
            .zero_test
            .verdict(r, &Bindings::new())
            .map_err(DetsysError::Zero)?;
        items.push(CheckItem {
            label: label.to_string(),
            origin: None,
            verdict: Verdict::from_outcome(&outcome, r),
            max_numeric_residual: outcome.max_abs,
            tolerance: outcome.max_abs.map(|_| opts.zero_test.tolerance),
        });
    }
    Ok(VerificationReport::from_items(items))
}

/// Compute the reduced-equation coefficients and attempt the omega rewrite
/// of the normalized form `phi'' + (A1/A2) phi' + (A0/A2) phi = f/A2`.
pub fn reduced_equation(
    sigma: &Expr,
    omega: &Expr,
    f: &Expr,
) -> Result<ReductionPackage, ReductionError> {
    for input in [sigma, omega, f] {
        if input.variables().contains("omega") {
            return Err(ReductionError::ReservedOmega);
        }
    }
    let omega_y = omega.diff("y")?;
    let omega_z = omega.diff("z")?;
    if omega_y.is_zero_literal() && omega_z.is_zero_literal() {
        return Err(ReductionError::OmegaConstant);
    }
    if f.variables().contains("u") {
        return Err(ReductionError::RhsDependsOnU);
    }
    let sigma_y = sigma.diff("y")?;
    let sigma_z = sigma.diff("z")?;
    let a0 = sigma_y.diff("z")?;
    let a1 = (omega_y.clone() * sigma_z
        + omega_z.clone() * sigma_y
        + sigma.clone() * omega_y.diff("z")?)
    .simplify()?;
    let a2 = (sigma.clone() * omega_y * omega_z).simplify()?;
    if a2.is_zero_literal() {
        return Err(ReductionError::DegenerateAnsatz);
    }
    let p = (a1.clone() / a2.clone()).simplify()?;
    let q = (a0.clone() / a2.clone()).simplify()?;
    let r = (f.clone() / a2.clone()).simplify()?;
    let p_of_omega = rewrite_in_invariant(&p, omega)?;
    let q_of_omega = rewrite_in_invariant(&q, omega)?;
    let r_of_omega = rewrite_in_invariant(&r, omega)?;
    Ok(ReductionPackage {
        t: None,
        k: None,
        s: None,
        omega: omega.simplify()?,
        sigma: sigma.simplify()?,
        f: f.simplify()?,
        a0,
        a1,
        a2,
        p_of_omega,
        q_of_omega,
        r_of_omega,
    })
}

/// Attempt to express `g(y,z)` as a function of `omega(y,z)` by solving
/// `omega = w` for one variable (the solvable cases are those where the
/// numerator of `omega - w` is degree one in `y` or `z`) and substituting.
/// Returns the rewritten expression in the variable `omega`.
pub fn rewrite_in_invariant(g: &Expr, omega: &Expr) -> Result<Option<Expr>, ReductionError> {
    let g_r = canon(g)?;
    if g_r.as_constant().is_some() {
        return Ok(Some(ratfunc_to_expr(&g_r)));
    }
    let w = RatFunc::from_atom(crate::expr::atom::Atom::var("omega"));
    let shifted = canon(omega)?.sub(&w);
    for var in ["z", "y"] {
        let atom = crate::expr::atom::Atom::var(var);
        let grouped = shifted.num().collect_by_atoms(std::slice::from_ref(&atom));
        if grouped.keys().any(|k| k[0] > 1) {
            continue;
        }
        let c1 = grouped.get(&vec![1u32]).cloned().unwrap_or_else(Poly::zero);
        let c0 = grouped.get(&vec![0u32]).cloned().unwrap_or_else(Poly::zero);
        if c1.is_zero() {
            continue;
        }
        // The coefficients must be genuinely free of the solved variable
        // (it may still hide inside exp arguments).
        if poly_mentions_var(&c1, var) || poly_mentions_var(&c0, var) {
            continue;
        }
        let sol = match RatFunc::from_poly(c0.neg()).div(&RatFunc::from_poly(c1)) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let b = Bindings::new().var(var, ratfunc_to_expr(&sol));
        let rewritten = match g.substitute(&b) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let vars = rewritten.variables();
        if !vars.contains("y") && !vars.contains("z") {
            return Ok(Some(rewritten));
        }
    }
    Ok(None)
}

fn poly_mentions_var(p: &Poly, var: &str) -> bool {
    p.terms.keys().any(|m| {
        m.exparg
            .as_ref()
            .map(|g| ratfunc_mentions_var(g, var))
            .unwrap_or(false)
            || m.powers.keys().any(|a| atom_mentions_var(a, var))
    })
}

fn ratfunc_mentions_var(r: &RatFunc, var: &str) -> bool {
    poly_mentions_var(r.num(), var) || poly_mentions_var(r.den(), var)
}

fn atom_mentions_var(a: &crate::expr::atom::Atom, var: &str) -> bool {
    use crate::expr::atom::Atom;
    match a {
        Atom::Var(v) => v == var,
        Atom::Jet(_) => false,
        Atom::Log(g) => ratfunc_mentions_var(g, var),
        Atom::Func(f) => match &f.args {
            Some(args) => args.iter().any(|x| ratfunc_mentions_var(x, var)),
            None => f.deps.iter().any(|d| d == var),
        },
    }
}

/// Options for the numeric level-set test.
#[derive(Clone, Debug)]
pub struct LevelSetOptions {
    pub sample_box: Box2D,
    pub seed: u64,
    pub pairs: usize,
    pub tolerance: f64,
}

impl Default for LevelSetOptions {
    fn default() -> Self {
        LevelSetOptions {
            sample_box: Box2D::default_box(),
            seed: DEFAULT_SEED,
            pairs: 20,
            tolerance: 1e-9,
        }
    }
}

/// Combined reducibility verdict: symbolic rewrite first, then the numeric
/// level-set test on the coefficients that resisted rewriting.
pub fn reducibility_test(
    pkg: &ReductionPackage,
    opts: &LevelSetOptions,
) -> Result<Reducibility, ReductionError> {
    if pkg.p_of_omega.is_some() && pkg.q_of_omega.is_some() && pkg.r_of_omega.is_some() {
        return Ok(Reducibility::ReducibleSymbolic);
    }
    // Normalized coefficients as functions on the box.
    let p = (pkg.a1.clone() / pkg.a2.clone()).simplify()?;
    let q = (pkg.a0.clone() / pkg.a2.clone()).simplify()?;
    let r = (pkg.f.clone() / pkg.a2.clone()).simplify()?;
    let mut unresolved = Vec::new();
    if pkg.p_of_omega.is_none() {
        unresolved.push(Compiled::new(&p, &["y", "z"])?);
    }
    if pkg.q_of_omega.is_none() {
        unresolved.push(Compiled::new(&q, &["y", "z"])?);
    }
    if pkg.r_of_omega.is_none() {
        unresolved.push(Compiled::new(&r, &["y", "z"])?);
    }
    let omega_c = Compiled::new(&pkg.omega, &["y", "z"])?;

    let bx = opts.sample_box;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut compared = 0usize;
    let mut attempts = 0usize;
    while compared < opts.pairs {
        attempts += 1;
        if attempts > 200 * opts.pairs {
            return Err(ReductionError::Numeric(NumericError::LevelSet(format!(
                "found only {compared} level-set pairs in the sampling box"
            ))));
        }
        let y1 = rng.gen_range(bx.y0..bx.y1);
        let z1 = rng.gen_range(bx.z0..bx.z1);
        let Ok(w) = omega_c.eval(&[y1, z1]) else {
            continue;
        };
        let y2 = rng.gen_range(bx.y0..bx.y1);
        if (y2 - y1).abs() < 1e-3 * (bx.y1 - bx.y0) {
            continue;
        }
        // Solve omega(y2, z) = w for z by bisection along the transversal.
        let Some(z2) = bisect_level(&omega_c, y2, w, bx.z0, bx.z1) else {
            continue;
        };
        let mut pair_ok = true;
        for c in &unresolved {
            let (Ok(v1), Ok(v2)) = (c.eval(&[y1, z1]), c.eval(&[y2, z2])) else {
                pair_ok = false;
                break;
            };
            let scale = v1.abs().max(v2.abs()).max(1.0);
            if (v1 - v2).abs() > opts.tolerance * scale {
                return Ok(Reducibility::NotReducible);
            }
        }
        if pair_ok {
            compared += 1;
        }
    }
    Ok(Reducibility::ReducibleNumeric)
}

fn bisect_level(omega: &Compiled, y: f64, w: f64, z_lo: f64, z_hi: f64) -> Option<f64> {
    const SCAN: usize = 64;
    let g = |z: f64| omega.eval(&[y, z]).map(|v| v - w);
    let mut prev_z = z_lo;
    let mut prev_v = g(prev_z).ok()?;
    for i in 1..=SCAN {
        let z = z_lo + (z_hi - z_lo) * i as f64 / SCAN as f64;
        let v = g(z).ok()?;
        if prev_v == 0.0 {
            return Some(prev_z);
        }
        if prev_v * v < 0.0 {
            // Bisection to full precision.
            let (mut a, mut b) = (prev_z, z);
            let (mut fa, _fb) = (prev_v, v);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = g(m).ok()?;
                if fm == 0.0 || (b - a).abs() < 1e-15 {
                    return Some(m);
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev_z = z;
        prev_v = v;
    }
    None
}

/// The assembled surface `u(y,z) = sigma(y,z) * phi(omega(y,z))` over a
/// dense numeric `phi`.
pub struct Surface {
    sigma: Compiled,
    omega: Compiled,
    phi: DenseSolution,
}

impl Surface {
    pub fn eval(&self, y: f64, z: f64) -> Result<f64, NumericError> {
        let w = self.omega.eval(&[y, z])?;
        let phi = self.phi.eval(w)?;
        Ok(self.sigma.eval(&[y, z])? * phi)
    }

    pub fn phi(&self) -> &DenseSolution {
        &self.phi
    }
}

/// Build the callable surface from a package and an integrated `phi`. The
/// interpolant must cover the omega range of the target box (checked at
/// evaluation time, surfaced as `OutOfDomain`).
pub fn assemble_solution(
    pkg: &ReductionPackage,
    phi: DenseSolution,
) -> Result<Surface, ReductionError> {
    Ok(Surface {
        sigma: Compiled::new(&pkg.sigma, &["y", "z"])?,
        omega: Compiled::new(&pkg.omega, &["y", "z"])?,
        phi,
    })
}

/// A verified `(T, omega, sigma)` triple.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub t: Expr,
    pub omega: Expr,
    pub sigma: Expr,
}

/// The catalog of standard generating functions with solved invariants.
pub fn catalog() -> Vec<CatalogEntry> {
    let e = |s: &str| crate::expr::parse(s, &crate::expr::DeclTable::standard()).unwrap();
    vec![
        CatalogEntry {
            t: e("y+z"),
            omega: e("y-z"),
            sigma: e("1"),
        },
        CatalogEntry {
            t: e("y*z"),
            omega: e("y/z"),
            sigma: e("y"),
        },
        CatalogEntry {
            t: e("y^2*z"),
            omega: e("z/y^2"),
            sigma: e("y^2"),
        },
        CatalogEntry {
            t: e("y+z^2"),
            omega: e("z^2-y"),
            sigma: e("1"),
        },
        CatalogEntry {
            t: e("exp(y)*z"),
            omega: e("z*exp(-y)"),
            sigma: e("exp(y)"),
        },
        CatalogEntry {
            t: e("y/z"),
            omega: e("y*z"),
            sigma: e("y"),
        },
    ]
}

/// Pattern-based characteristic solver for `omega`: handles the separable
/// and homogeneous shapes `K = c`, `c z/y`, `c y/z`, `c z`, `c y`, `c/z`,
/// `c/y` of `dz/dy = K(y,z)`. Returns `None` outside the table.
pub fn solve_omega(k: &Expr) -> Result<Option<Expr>, ReductionError> {
    let y = Expr::var("y");
    let z = Expr::var("z");
    let kc = canon(k)?;
    if let Some(c) = kc.as_constant() {
        // omega = z - c y
        let c = Expr::Rat(c).simplify()?;
        return Ok(Some((z - c * y).simplify()?));
    }
    let ratio = |num: &Expr| -> Result<Option<num_rational::BigRational>, ReductionError> {
        let r = canon(&(k.clone() * num.clone()))?;
        Ok(r.as_constant())
    };
    // K = c z / y  =>  omega = z^q / y^p with c = p/q
    if let Some(c) = canon(&(k.clone() * y.clone() / z.clone()))?.as_constant() {
        let p = c.numer().clone();
        let q = c.denom().clone();
        use num_traits::ToPrimitive;
        if let (Some(p), Some(q)) = (p.to_i64(), q.to_i64()) {
            let omega = (Expr::pow(z, q) / Expr::pow(y, p)).simplify()?;
            return Ok(Some(omega));
        }
        return Ok(None);
    }
    // K = c y / z  =>  omega = z^2 - c y^2
    if let Some(c) = canon(&(k.clone() * z.clone() / y.clone()))?.as_constant() {
        let c = Expr::Rat(c).simplify()?;
        return Ok(Some((Expr::pow(z, 2) - c * Expr::pow(y, 2)).simplify()?));
    }
    // K = c z  =>  omega = z exp(-c y)
    if let Some(c) = canon(&(k.clone() / z.clone()))?.as_constant() {
        let c = Expr::Rat(c).simplify()?;
        return Ok(Some((z * Expr::exp(-(c * y))).simplify()?));
    }
    // K = c / z  =>  omega = z^2 - 2 c y
    if let Some(c) = ratio(&z)? {
        let two_c = Expr::Rat(c).simplify()? * Expr::int(2);
        return Ok(Some((Expr::pow(z, 2) - two_c * y).simplify()?));
    }
    // K = c y  =>  omega = z - (c/2) y^2
    if let Some(c) = canon(&(k.clone() / y.clone()))?.as_constant() {
        let half_c = (Expr::Rat(c) * Expr::ratio(1, 2)).simplify()?;
        return Ok(Some((z - half_c * Expr::pow(y, 2)).simplify()?));
    }
    // K = c / y  =>  omega = z - c log(y)
    if let Some(c) = ratio(&y)? {
        let c = Expr::Rat(c).simplify()?;
        return Ok(Some((z - c * Expr::log(y)).simplify()?));
    }
    Ok(None)
}

/// Pattern-based solver for `sigma` from `s`: `s = 0` gives `sigma = 1`,
/// `s = m/y` with integer `m` gives `sigma = y^m`, constant `s = c` gives
/// `sigma = exp(c y)`. These satisfy `sigma_y + K sigma_z = s sigma` with
/// `sigma_z = 0`, so they work for every `K`.
pub fn solve_sigma(s: &Expr) -> Result<Option<Expr>, ReductionError> {
    let sc = canon(s)?;
    if sc.is_zero() {
        return Ok(Some(Expr::one()));
    }
    if let Some(c) = sc.as_constant() {
        let c = Expr::Rat(c).simplify()?;
        return Ok(Some(Expr::exp(c * Expr::var("y")).simplify()?));
    }
    let m = canon(&(s.clone() * Expr::var("y")))?;
    if let Some(c) = m.as_constant() {
        use num_traits::ToPrimitive;
        if c.is_integer() {
            if let Some(mi) = c.to_integer().to_i64() {
                return Ok(Some(Expr::pow(Expr::var("y"), mi).simplify()?));
            }
        }
    }
    Ok(None)
}
