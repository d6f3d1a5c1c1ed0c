//! Determining systems for conditional invariance of `u_yz = f(y,z,u)`.
//!
//! The generator prolongs the canonical operator, restricts to the manifold
//! cut out by `u_yz = f`, the surface condition and its first total
//! derivatives, and collects the invariance polynomial's coefficients in
//! the free jet monomials. The resulting members are compared against
//! built-in reference transcriptions of the closed-form system, so any
//! drift between the generator and the reference is a reportable finding,
//! never silently patched.

pub mod cases;
pub mod lie;

use std::sync::OnceLock;

use serde::Serialize;

use crate::expr::atom::Atom;
use crate::expr::canon::{canon, ratfunc_to_expr};
use crate::expr::poly::Poly;
use crate::expr::ratfunc::RatFunc;
use crate::expr::zero::{ZeroTest, ZeroTestError};
use crate::expr::{Bindings, DeclTable, Expr, ExprError};
use crate::jet::{ConditionalOperator, Eliminator, JetError};
use crate::report::{CheckItem, Verdict, VerificationReport};

/// Which canonical operator family the system describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SystemForm {
    /// `Q = d_y + K d_z + L d_u` with `K != 0`; four equations.
    ANonzero,
    /// `K = 0`: condition `u_y = L` (the `a = 0` family written on the
    /// mirrored side, as the closed-form system is); two equations.
    AZero,
}

#[derive(Debug, thiserror::Error)]
pub enum DetsysError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("zero test failed: {0}")]
    Zero(#[from] ZeroTestError),
    #[error("substitution failed: {0}")]
    Subst(String),
    #[error("K is identically zero; the a != 0 form divides by K")]
    KIdenticallyZero,
    #[error("internal error: collected denominator is not a power of K")]
    DenominatorNotKPower,
    #[error("classification inconclusive: {0}")]
    Undecided(String),
    #[error("{0}")]
    Invalid(String),
}

/// One member of a determining system.
#[derive(Clone, Debug, Serialize)]
pub struct Member {
    /// 1-based position in the system.
    pub index: usize,
    /// Jet monomial whose coefficient this is, e.g. `u_z^3`.
    pub origin: String,
    /// Exact coefficient as a rational function (may carry 1/K powers).
    #[serde(serialize_with = "ser_expr")]
    pub raw: Expr,
    /// The coefficient cleared of denominators by the minimal K power.
    #[serde(serialize_with = "ser_expr")]
    pub cleared: Expr,
    /// The clearing power of K.
    pub k_power: u32,
}

pub(crate) fn ser_expr<S: serde::Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&e.to_dsl())
}

pub(crate) fn ser_opt_expr<S: serde::Serializer>(
    e: &Option<Expr>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_some(&e.to_dsl()),
        None => s.serialize_none(),
    }
}

/// An ordered determining system with per-member provenance.
#[derive(Clone, Debug, Serialize)]
pub struct DeterminingSystem {
    pub form: SystemForm,
    /// Whether the `K_u = 0` specialization has been applied.
    pub ku_zero: bool,
    pub members: Vec<Member>,
}

fn opaque_klf() -> (Expr, Expr, Expr) {
    (
        Expr::func("K", &["y", "z", "u"]),
        Expr::func("L", &["y", "z", "u"]),
        Expr::func("f", &["y", "z", "u"]),
    )
}

/// The invariance polynomial `pr Q (u_yz - f)` restricted to the manifold,
/// for the canonical `a != 0` operator with opaque `K`, `L`, `f`.
fn invariance_polynomial(k: &Expr, l: &Expr, f: &Expr) -> Result<Expr, DetsysError> {
    let op = ConditionalOperator::canonical_kl(k.clone(), l.clone())?;
    let pr = crate::jet::prolong(&op)?;
    let qf = (k.clone() * f.diff("z")? + f.diff("y")? + l.clone() * f.diff("u")?).simplify()?;
    let e = (pr.eta_yz - qf).simplify()?;
    let el = Eliminator::new(&op, f)?;
    Ok(el.eliminate_with_uzz(&e)?)
}

/// The same pipeline for the `K = 0` family (condition `u_y = L`): the
/// surface condition supplies `u_y` and `u_yy`; the equation supplies
/// `u_yz` directly (the derivative relation degenerates when `K = 0`).
fn invariance_polynomial_a_zero(l: &Expr, f: &Expr) -> Result<Expr, DetsysError> {
    let op = ConditionalOperator::general(Expr::one(), Expr::zero(), l.clone())?;
    let pr = crate::jet::prolong(&op)?;
    let qf = (f.diff("y")? + l.clone() * f.diff("u")?).simplify()?;
    let e = (pr.eta_yz - qf).simplify()?;
    let uyy = crate::jet::total_derivative(l, crate::jet::Direction::Y)?
        .substitute(&Bindings::new().jet(1, 0, l.clone()))
        .map_err(|err| DetsysError::Subst(err.to_string()))?;
    let rules = Bindings::new()
        .jet(1, 0, l.clone())
        .jet(2, 0, uyy)
        .jet(1, 1, f.clone());
    e.substitute(&rules)
        .map_err(|err| DetsysError::Subst(err.to_string()))
}

/// Collect an invariance polynomial into ordered members by descending
/// power of `u_z`, clearing each coefficient's K-power denominator.
fn collect_members(e: &Expr) -> Result<Vec<Member>, DetsysError> {
    let r = canon(e)?;
    let uz = Atom::jet(0, 1);
    let uzz = Atom::jet(0, 2);
    let k_atom = Atom::Func(crate::expr::atom::FuncAtom {
        name: "K".into(),
        deps: vec!["y".into(), "z".into(), "u".into()],
        index: vec![0, 0, 0],
        args: None,
    });

    // The full denominator must be a pure K power.
    let den = r.den();
    check_k_power(den, &k_atom)?;

    let grouped = r.num().collect_by_atoms(&[uz, uzz]);
    let mut members = Vec::new();
    for (key, coeff) in grouped.iter().rev() {
        if key[1] != 0 {
            return Err(DetsysError::Invalid(
                "free u_zz survived elimination".into(),
            ));
        }
        if coeff.is_zero() {
            continue;
        }
        if coeff.atoms().iter().any(|a| matches!(a, Atom::Jet(_))) {
            return Err(DetsysError::Invalid(
                "jet variable survived into a determining-equation coefficient".into(),
            ));
        }
        let raw_rf = RatFunc::new(coeff.clone(), den.clone())
            .map_err(|e| DetsysError::Expr(ExprError::Arith(e)))?;
        let k_power = check_k_power(raw_rf.den(), &k_atom)?;
        let cleared_poly = raw_rf.num().integer_normalized();
        members.push(Member {
            index: 0,
            origin: origin_label(key[0]),
            raw: ratfunc_to_expr(&raw_rf),
            cleared: ratfunc_to_expr(&RatFunc::from_poly(cleared_poly)),
            k_power,
        });
    }
    for (i, m) in members.iter_mut().enumerate() {
        m.index = i + 1;
    }
    Ok(members)
}

fn origin_label(uz_power: u32) -> String {
    match uz_power {
        0 => "1".to_string(),
        1 => "u_z".to_string(),
        k => format!("u_z^{k}"),
    }
}

fn check_k_power(den: &Poly, k_atom: &Atom) -> Result<u32, DetsysError> {
    if den.is_one() {
        return Ok(0);
    }
    if den.terms.len() != 1 {
        return Err(DetsysError::DenominatorNotKPower);
    }
    let (m, _) = den.terms.iter().next().unwrap();
    if m.exparg.is_some() || m.powers.len() != 1 {
        return Err(DetsysError::DenominatorNotKPower);
    }
    let (a, &p) = m.powers.iter().next().unwrap();
    if a == k_atom {
        Ok(p)
    } else {
        Err(DetsysError::DenominatorNotKPower)
    }
}

/// Generate the determining system for the requested canonical form.
///
/// For `a != 0` the system has exactly four members, ordered by descending
/// `u_z` power; for `a = 0` exactly two.
pub fn generate_determining_system(form: SystemForm) -> Result<DeterminingSystem, DetsysError> {
    let (k, l, f) = opaque_klf();
    let members = match form {
        SystemForm::ANonzero => {
            let e = invariance_polynomial(&k, &l, &f)?;
            collect_members(&e)?
        }
        SystemForm::AZero => {
            let e = invariance_polynomial_a_zero(&l, &f)?;
            collect_members(&e)?
        }
    };
    let expected = match form {
        SystemForm::ANonzero => 4,
        SystemForm::AZero => 2,
    };
    if members.len() != expected {
        return Err(DetsysError::Invalid(format!(
            "expected {expected} members, generated {}",
            members.len()
        )));
    }
    Ok(DeterminingSystem {
        form,
        ku_zero: false,
        members,
    })
}

/// Specialize a generated `a != 0` system to `K_u = 0` (`K = K(y,z)`);
/// identically vanishing members are dropped.
pub fn specialize_ku_zero(sys: &DeterminingSystem) -> Result<DeterminingSystem, DetsysError> {
    if sys.form != SystemForm::ANonzero {
        return Err(DetsysError::Invalid(
            "K_u = 0 specialization applies to the a != 0 form".into(),
        ));
    }
    let b = Bindings::new().func("K", &["y", "z", "u"], Expr::func("K", &["y", "z"]));
    let mut members = Vec::new();
    for m in &sys.members {
        let raw = m
            .raw
            .substitute(&b)
            .map_err(|e| DetsysError::Subst(e.to_string()))?;
        if raw.is_zero_literal() {
            continue;
        }
        let r = canon(&raw)?;
        let cleared = ratfunc_to_expr(&RatFunc::from_poly(r.num().integer_normalized()));
        members.push(Member {
            index: members.len() + 1,
            origin: m.origin.clone(),
            raw,
            cleared,
            k_power: 0,
        });
    }
    Ok(DeterminingSystem {
        form: SystemForm::ANonzero,
        ku_zero: true,
        members,
    })
}

fn cached_system(form: SystemForm) -> Result<&'static DeterminingSystem, DetsysError> {
    static A_NONZERO: OnceLock<DeterminingSystem> = OnceLock::new();
    static A_ZERO: OnceLock<DeterminingSystem> = OnceLock::new();
    let cell = match form {
        SystemForm::ANonzero => &A_NONZERO,
        SystemForm::AZero => &A_ZERO,
    };
    if cell.get().is_none() {
        let sys = generate_determining_system(form)?;
        let _ = cell.set(sys);
    }
    Ok(cell.get().unwrap())
}

/// The generated system, cached (it is pure and deterministic).
pub fn system(form: SystemForm) -> Result<DeterminingSystem, DetsysError> {
    Ok(cached_system(form)?.clone())
}

/// The generated Case-1 system (`K_u = 0` specialization), cached.
pub fn system_ku_zero() -> Result<DeterminingSystem, DetsysError> {
    static KU_ZERO: OnceLock<DeterminingSystem> = OnceLock::new();
    if KU_ZERO.get().is_none() {
        let sys = specialize_ku_zero(cached_system(SystemForm::ANonzero)?)?;
        let _ = KU_ZERO.set(sys);
    }
    Ok(KU_ZERO.get().unwrap().clone())
}

// ---------------------------------------------------------------------------
// Reference transcriptions of the closed-form determining equations.
// ---------------------------------------------------------------------------

/// The four equations of the `a != 0` family, in the DSL.
pub const REFERENCE_A_NONZERO: [&str; 4] = [
    "-K_u^2 + K_uu*K",
    "-K*L_uu + (K_u*K_y)/K + (K_u^2*L)/K + K_u*(L_u - K_z) - K_uy - L*K_uu + K*K_zu",
    "L_uy - L_uz*K + L_uu*L - (L_u*K_y)/K + (K_y*K_z)/K - K_yz - 3*K_u*f - ((K_u*L)/K)*(L_u - K_z) + K_u*L_z - K_zu*L",
    "-f_y - K*f_z - L*f_u + L_yz + L_uz*L + L_u*f - (K_y/K)*(L_z - f) - K_z*f - ((K_u*L)/K)*(L_z - f)",
];

/// The three equations of the Case-1 family (`K_u = 0`, `K != 0`).
pub const REFERENCE_CASE1: [&str; 3] = [
    "-K*L_uu",
    "L_uy - L_uz*K + L_uu*L - (L_u*K_y)/K + (K_y*K_z)/K - K_yz",
    "-f_y - K*f_z - L*f_u + L_yz + L_uz*L + L_u*f - (K_y/K)*(L_z - f) - K_z*f",
];

/// The two equations of the `a = 0` family (Case 2, condition `u_y = L`).
pub const REFERENCE_A_ZERO: [&str; 2] = ["L_uy + L_uu*L", "-f_y - L*f_u + L_yz + L_uz*L + L_u*f"];

/// Declarations for parsing the reference transcriptions; Case 1 declares
/// `K` on `(y, z)`.
pub fn reference_decls(ku_zero: bool) -> DeclTable {
    let mut t = DeclTable::new();
    if ku_zero {
        t.declare("K", &["y", "z"]).unwrap();
    } else {
        t.declare("K", &["y", "z", "u"]).unwrap();
    }
    t.declare("L", &["y", "z", "u"]).unwrap();
    t.declare("f", &["y", "z", "u"]).unwrap();
    t
}

/// Outcome of comparing a generated system against its reference
/// transcription, member by member.
#[derive(Clone, Debug, Serialize)]
pub struct RegressionRow {
    pub index: usize,
    pub origin: String,
    pub generated: String,
    pub reference: String,
    /// Exact symbolic equality of the rational forms.
    pub matches: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegressionReport {
    pub rows: Vec<RegressionRow>,
    pub all_match: bool,
}

/// Compare a generated system to the reference transcription. The
/// comparison is exact: the difference of the rational forms must be the
/// zero normal form.
pub fn regression_against_reference(
    sys: &DeterminingSystem,
) -> Result<RegressionReport, DetsysError> {
    let (refs, decls): (&[&str], DeclTable) = if sys.ku_zero {
        (&REFERENCE_CASE1, reference_decls(true))
    } else {
        match sys.form {
            SystemForm::ANonzero => (&REFERENCE_A_NONZERO, reference_decls(false)),
            SystemForm::AZero => (&REFERENCE_A_ZERO, reference_decls(false)),
        }
    };
    let mut rows = Vec::new();
    for (i, m) in sys.members.iter().enumerate() {
        let (reference_text, matches) = match refs.get(i) {
            Some(txt) => {
                let parsed = crate::expr::parse(txt, &decls)
                    .map_err(|e| DetsysError::Invalid(format!("reference parse: {e}")))?;
                let diff = (m.raw.clone() - parsed).simplify()?;
                (txt.to_string(), diff.is_zero_literal())
            }
            None => (String::from("<missing>"), false),
        };
        rows.push(RegressionRow {
            index: m.index,
            origin: m.origin.clone(),
            generated: m.raw.to_dsl(),
            reference: reference_text,
            matches,
        });
    }
    let all_match = rows.iter().all(|r| r.matches) && rows.len() == refs.len();
    Ok(RegressionReport { rows, all_match })
}

// ---------------------------------------------------------------------------
// Verification and classification
// ---------------------------------------------------------------------------

/// Options for operator verification.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub zero_test: ZeroTest,
}

/// Substitute a candidate `(K, L, f)` into the determining system for the
/// given form and test each member. With `f = None` the right side stays
/// opaque: members that still mention `f` are reported as constraints on it
/// rather than pass/fail.
pub fn verify_conditional_operator(
    f: Option<&Expr>,
    k: &Expr,
    l: &Expr,
    form: SystemForm,
    opts: &VerifyOptions,
) -> Result<VerificationReport, DetsysError> {
    if form == SystemForm::ANonzero && k.is_zero_symbolic()? {
        return Err(DetsysError::KIdenticallyZero);
    }
    let sys = system(form)?;
    verify_against_system(&sys, f, k, l, opts)
}

pub fn verify_against_system(
    sys: &DeterminingSystem,
    f: Option<&Expr>,
    k: &Expr,
    l: &Expr,
    opts: &VerifyOptions,
) -> Result<VerificationReport, DetsysError> {
    let k_deps: &[&str] = if sys.ku_zero {
        &["y", "z"]
    } else {
        &["y", "z", "u"]
    };
    let mut b = Bindings::new()
        .func("K", k_deps, k.clone())
        .func("L", &["y", "z", "u"], l.clone());
    if let Some(f) = f {
        b = b.func("f", &["y", "z", "u"], f.clone());
    }
    let mut items = Vec::new();
    for m in &sys.members {
        let substituted = m
            .cleared
            .substitute(&b)
            .map_err(|e| DetsysError::Subst(e.to_string()))?;
        let label = format!("equation {}", m.index);
        if f.is_none() && substituted.mentions_func("f") {
            items.push(CheckItem {
                label,
                origin: Some(m.origin.clone()),
                verdict: Verdict::Constrains {
                    unknown: "f".into(),
                    residual: substituted.to_dsl(),
                },
                max_numeric_residual: None,
                tolerance: None,
            });
            continue;
        }
        let outcome = opts.zero_test.verdict(&substituted, &Bindings::new())?;
        items.push(CheckItem {
            label,
            origin: Some(m.origin.clone()),
            verdict: Verdict::from_outcome(&outcome, &substituted),
            max_numeric_residual: outcome.max_abs,
            tolerance: outcome.max_abs.map(|_| opts.zero_test.tolerance),
        });
    }
    Ok(VerificationReport::from_items(items))
}

/// Case classification of a candidate `K(y,z,u)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    /// `K_u = 0`, `K != 0`.
    Case1,
    /// `K = 0`.
    Case2,
    /// `K_u != 0`; the flag records whether `K_uu K - K_u^2 = 0`, the
    /// structure of the exponential family.
    Case3 { exponential_structure: bool },
    /// The zero tests were inconclusive; never guessed.
    Undecided,
}

pub fn classify_case(k: &Expr, opts: &VerifyOptions) -> Result<CaseTag, DetsysError> {
    let zt = &opts.zero_test;
    let k_out = zt.verdict(k, &Bindings::new())?;
    match k_out.verdict {
        crate::expr::zero::ZeroVerdict::Zero => return Ok(CaseTag::Case2),
        crate::expr::zero::ZeroVerdict::ZeroProbabilistic => return Ok(CaseTag::Undecided),
        crate::expr::zero::ZeroVerdict::NonZero => {}
    }
    let ku = k.diff("u")?;
    let ku_out = zt.verdict(&ku, &Bindings::new())?;
    match ku_out.verdict {
        crate::expr::zero::ZeroVerdict::Zero => Ok(CaseTag::Case1),
        crate::expr::zero::ZeroVerdict::ZeroProbabilistic => Ok(CaseTag::Undecided),
        crate::expr::zero::ZeroVerdict::NonZero => {
            let kuu = ku.diff("u")?;
            let structure = (kuu * k.clone() - ku.clone() * ku.clone()).simplify()?;
            let exponential_structure = structure.is_zero_literal();
            Ok(CaseTag::Case3 {
                exponential_structure,
            })
        }
    }
}
