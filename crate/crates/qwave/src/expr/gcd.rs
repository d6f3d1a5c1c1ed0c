//! Multivariate polynomial gcd and exact division.
//!
//! The gcd is the classic primitive-part / pseudo-remainder recursion,
//! univariatizing in one atom at a time. Exponential factors are units in
//! this ring, so the gcd of polynomials with exp layers is the gcd of all
//! their exp-free layer polynomials.
//!
//! The recursion carries a deterministic work budget. The determining
//! systems and worked examples stay far below it; adversarial inputs (deep
//! random quotients) exhaust it, and the fraction is then reduced by its
//! monomial content only. That is sound: zero testing cross-multiplies and
//! inspects the numerator, which never requires a reduced form.

use std::cell::Cell;

use num_traits::One;

use super::atom::Atom;
use super::poly::{Coef, Monomial, Poly};

const GCD_BUDGET: u64 = 30_000;

thread_local! {
    static GCD_OPS: Cell<u64> = const { Cell::new(0) };
}

/// Deduct `n` work units; false once the budget is gone.
fn spend(n: u64) -> bool {
    GCD_OPS.with(|c| {
        let v = c.get().saturating_sub(n);
        c.set(v);
        v > 0
    })
}

/// Work measure of a polynomial: term count weighted by coefficient size,
/// so that pseudo-remainder coefficient blowup drains the budget fast.
fn poly_cost(p: &Poly) -> u64 {
    let mut cost = 0u64;
    for c in p.terms.values() {
        cost += 1 + (c.numer().bits() + c.denom().bits()) / 32;
    }
    cost
}

/// Exact division `p / d` by leading-term elimination; `None` if `d` does
/// not divide `p`. Both sides may carry exp factors (they never obstruct).
pub fn divide_exact(p: &Poly, d: &Poly) -> Option<Poly> {
    if d.is_zero() {
        return None;
    }
    if p.is_zero() {
        return Some(Poly::zero());
    }
    let (dm, dc) = d.leading().map(|(m, c)| (m.clone(), c.clone()))?;
    let mut rem = p.clone();
    let mut quo = Poly::zero();
    while !rem.is_zero() {
        let (rm, rc) = rem.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        if !rm.divisible_by(&dm) {
            return None;
        }
        let qm = rm.div(&dm);
        let qc = rc / &dc;
        quo.add_term(qm.clone(), qc.clone());
        rem = rem.sub(&d.mul_monomial(&qm, &qc));
    }
    Some(quo)
}

/// Gcd of two polynomials, up to a unit. Returns a primitive
/// (integer-normalized) polynomial; `gcd(0, b) = b`, `gcd(0, 0) = 0`.
pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    // Units include exp factors: strip layers down to exp-free parts.
    let mut parts: Vec<Poly> = Vec::new();
    for p in [a, b] {
        for (_, layer) in p.exp_layers() {
            if !layer.is_zero() {
                parts.push(layer);
            }
        }
    }
    // Factor out the common monomial content first; it is cheap and it
    // keeps the Euclidean recursion on primitive parts.
    let mono = parts
        .iter()
        .map(monomial_content)
        .reduce(|acc, m| monomial_min(&acc, &m))
        .unwrap_or_else(Monomial::one);
    let stripped: Vec<Poly> = parts
        .iter()
        .map(|p| divide_by_monomial(p, &monomial_content(p)))
        .collect();
    GCD_OPS.with(|c| c.set(GCD_BUDGET));
    let mut g = Poly::zero();
    for p in &stripped {
        g = gcd_expfree(&g, p);
        if g.is_one() {
            break;
        }
    }
    g.mul_monomial(&mono, &Coef::one())
}

/// Componentwise minimum exponent over all monomials of `p` (`p` nonzero).
fn monomial_content(p: &Poly) -> Monomial {
    let mut it = p.terms.keys();
    let Some(first) = it.next() else {
        return Monomial::one();
    };
    let mut acc = Monomial {
        powers: first.powers.clone(),
        exparg: None,
    };
    for m in it {
        acc = monomial_min(&acc, m);
        if acc.powers.is_empty() {
            break;
        }
    }
    acc
}

fn monomial_min(a: &Monomial, b: &Monomial) -> Monomial {
    let mut powers = std::collections::BTreeMap::new();
    for (atom, &ka) in &a.powers {
        let kb = b.degree_of(atom);
        let k = ka.min(kb);
        if k > 0 {
            powers.insert(atom.clone(), k);
        }
    }
    Monomial {
        powers,
        exparg: None,
    }
}

fn divide_by_monomial(p: &Poly, m: &Monomial) -> Poly {
    if m.is_one() {
        return p.clone();
    }
    Poly {
        terms: p
            .terms
            .iter()
            .map(|(mm, c)| (mm.div(m), c.clone()))
            .collect(),
    }
}

fn gcd_expfree(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.integer_normalized();
    }
    if b.is_zero() {
        return a.integer_normalized();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    // Exact-division fast paths catch the common reduction patterns
    // (denominator powers, shared factors from the quotient rule).
    if a.terms.len() * b.terms.len() <= 4096 {
        if divide_exact(a, b).is_some() {
            return b.integer_normalized();
        }
        if divide_exact(b, a).is_some() {
            return a.integer_normalized();
        }
    }
    if a.terms.len() == 1 || b.terms.len() == 1 {
        // Any divisor of a monomial is a monomial.
        let m = monomial_min(&monomial_content(a), &monomial_content(b));
        return Poly::from_monomial(m, Coef::one());
    }
    // Most gcd calls are between coprime polynomials; a modular evaluation
    // screen proves coprimality cheaply and skips the Euclidean recursion.
    if coprime_screen(a, b) {
        return Poly::one();
    }
    // Out of budget: claim no common factor, which is always sound.
    if !spend(poly_cost(a) + poly_cost(b)) {
        return Poly::one();
    }
    // Univariatize in the atom of highest total presence.
    let atoms = a.atoms();
    let x = atoms
        .iter()
        .find(|at| b.degree_in(at) > 0)
        .cloned()
        .unwrap_or_else(|| atoms[0].clone());
    if b.degree_in(&x) == 0 {
        // x appears only in a: gcd(a, b) = gcd(content_x(a), b)
        let cont = content_in(a, &x);
        return gcd_expfree(&cont, b);
    }
    if a.degree_in(&x) == 0 {
        let cont = content_in(b, &x);
        return gcd_expfree(a, &cont);
    }

    let (cont_a, prim_a) = content_primitive(a, &x);
    let (cont_b, prim_b) = content_primitive(b, &x);
    let cont_gcd = gcd_expfree(&cont_a, &cont_b);

    let mut p = prim_a;
    let mut q = prim_b;
    if degree(&p, &x) < degree(&q, &x) {
        std::mem::swap(&mut p, &mut q);
    }
    while !q.is_zero() {
        if !spend(poly_cost(&p) + poly_cost(&q)) {
            return Poly::one();
        }
        let Some(r) = pseudo_rem(&p, &q, &x) else {
            return Poly::one();
        };
        p = q;
        q = primitive_part(&r, &x);
    }
    cont_gcd.mul(&primitive_part(&p, &x)).integer_normalized()
}

fn degree(p: &Poly, x: &Atom) -> u32 {
    p.degree_in(x)
}

/// Coefficients of `p` viewed as univariate in `x`, index = degree.
fn uni_coeffs(p: &Poly, x: &Atom) -> Vec<Poly> {
    let n = p.degree_in(x) as usize;
    let mut out = vec![Poly::zero(); n + 1];
    for (m, c) in &p.terms {
        let k = m.degree_of(x) as usize;
        let mut rest = m.clone();
        rest.powers.remove(x);
        out[k].add_term(rest, c.clone());
    }
    out
}

fn content_in(p: &Poly, x: &Atom) -> Poly {
    let coeffs = uni_coeffs(p, x);
    let mut g = Poly::zero();
    for c in coeffs {
        if !c.is_zero() {
            g = gcd_expfree(&g, &c);
            if g.is_one() {
                break;
            }
        }
    }
    g
}

// ---------------------------------------------------------------------
// Modular coprimality screen.
//
// For every atom shared by `a` and `b`, evaluate all other atoms at
// deterministic residues modulo a prime, reduce the two univariate images
// with a fast Euclid in Z_p[x], and check the image gcd is constant. If the
// leading coefficients survive the evaluation, the image gcd bounds the
// true gcd's degree from above, so constant images for every shared atom
// prove gcd = 1. Inconclusive attempts fall back to the exact path.
// ---------------------------------------------------------------------

const SCREEN_PRIME: u64 = 2_147_483_629; // < 2^31, products fit in u64

fn coprime_screen(a: &Poly, b: &Poly) -> bool {
    let atoms_a = a.atoms();
    let atoms_b = b.atoms();
    let shared: Vec<&Atom> = atoms_a.iter().filter(|x| atoms_b.contains(x)).collect();
    if shared.is_empty() {
        // Disjoint atom sets: the only common divisors are rational units.
        return true;
    }
    let all: Vec<&Atom> = {
        let mut v = atoms_a.iter().collect::<Vec<_>>();
        for at in &atoms_b {
            if !v.contains(&at) {
                v.push(at);
            }
        }
        v
    };
    'next_atom: for x in &shared {
        for attempt in 0u64..3 {
            let mut assignment = Vec::with_capacity(all.len());
            for (i, at) in all.iter().enumerate() {
                // Deterministic pseudo-random residues in [2, p).
                let mut s = 0x9e3779b97f4a7c15u64
                    .wrapping_mul(i as u64 + 1)
                    .wrapping_add(attempt.wrapping_mul(0xbf58476d1ce4e5b9));
                s ^= s >> 31;
                assignment.push(((*at).clone(), 2 + s % (SCREEN_PRIME - 2)));
            }
            let da = a.degree_in(x);
            let db = b.degree_in(x);
            let (Some(fa), Some(fb)) = (
                eval_uni_mod(a, x, &assignment),
                eval_uni_mod(b, x, &assignment),
            ) else {
                continue;
            };
            // Leading coefficients must survive the evaluation.
            if uni_degree(&fa) != Some(da as usize) || uni_degree(&fb) != Some(db as usize) {
                continue;
            }
            match gcd_mod(&fa, &fb) {
                Some(0) => continue 'next_atom,
                _ => continue,
            }
        }
        return false;
    }
    true
}

/// Coefficients of `p` viewed as univariate in `x` with every other atom
/// evaluated mod the screen prime. `None` if a rational coefficient's
/// denominator vanishes mod p.
fn eval_uni_mod(p: &Poly, x: &Atom, assignment: &[(Atom, u64)]) -> Option<Vec<u64>> {
    let n = p.degree_in(x) as usize;
    let mut out = vec![0u64; n + 1];
    let pm = SCREEN_PRIME;
    let big_p = num_bigint::BigInt::from(pm);
    for (m, c) in &p.terms {
        use num_traits::ToPrimitive;
        let num = ((c.numer() % &big_p) + &big_p) % &big_p;
        let den = ((c.denom() % &big_p) + &big_p) % &big_p;
        let num = num.to_u64()?;
        let den = den.to_u64()? % pm;
        if den == 0 {
            return None;
        }
        let mut t = (num % pm) * mod_inv(den, pm)? % pm;
        let mut deg = 0usize;
        for (at, &k) in &m.powers {
            if at == x {
                deg = k as usize;
                continue;
            }
            let r = assignment
                .iter()
                .find(|(cand, _)| cand == at)
                .map(|(_, r)| *r)?;
            t = t * mod_pow(r, k as u64, pm) % pm;
        }
        out[deg] = (out[deg] + t) % pm;
    }
    Some(out)
}

fn uni_degree(f: &[u64]) -> Option<usize> {
    f.iter().rposition(|&c| c != 0)
}

/// Degree of the univariate gcd mod p; `None` for the zero polynomial.
fn gcd_mod(f: &[u64], g: &[u64]) -> Option<usize> {
    let pm = SCREEN_PRIME;
    let mut f: Vec<u64> = f.to_vec();
    let mut g: Vec<u64> = g.to_vec();
    loop {
        let (Some(df), Some(dg)) = (uni_degree(&f), uni_degree(&g)) else {
            // One side is zero: gcd is the other side.
            return uni_degree(&f).or(uni_degree(&g));
        };
        if dg > df {
            std::mem::swap(&mut f, &mut g);
            continue;
        }
        // f := f - (lc_f / lc_g) x^(df-dg) g
        let lf = f[df];
        let lg = g[dg];
        let factor = lf * mod_inv(lg, pm)? % pm;
        let shift = df - dg;
        for (i, gi) in g.iter().enumerate().take(dg + 1) {
            let sub = factor * gi % pm;
            f[i + shift] = (f[i + shift] + pm - sub) % pm;
        }
        if uni_degree(&f).is_none() {
            return Some(dg);
        }
    }
}

fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

fn mod_inv(a: u64, m: u64) -> Option<u64> {
    if a == 0 {
        return None;
    }
    Some(mod_pow(a, m - 2, m))
}

fn content_primitive(p: &Poly, x: &Atom) -> (Poly, Poly) {
    let cont = content_in(p, x);
    let prim = divide_exact(p, &cont).expect("content divides");
    (cont, prim)
}

fn primitive_part(p: &Poly, x: &Atom) -> Poly {
    if p.is_zero() {
        return Poly::zero();
    }
    let cont = content_in(p, x);
    divide_exact(p, &cont).expect("content divides")
}

/// Pseudo-remainder of `p` by `q` in `x`: lc(q)^(dp-dq+1) * p mod q.
/// `None` when the work budget runs out mid-division.
fn pseudo_rem(p: &Poly, q: &Poly, x: &Atom) -> Option<Poly> {
    let dq = degree(q, x);
    let qc = uni_coeffs(q, x);
    let lq = qc[dq as usize].clone();
    let mut r = p.clone();
    let mut dr = degree(&r, x);
    // Number of multiplications by lc(q) is bounded by dp - dq + 1; we
    // multiply lazily, once per elimination step.
    while !r.is_zero() && dr >= dq {
        if !spend(poly_cost(&r)) {
            return None;
        }
        let rc = uni_coeffs(&r, x);
        let lr = rc[dr as usize].clone();
        if lr.is_zero() {
            break;
        }
        // r := lq * r - lr * x^(dr-dq) * q
        let mut shift = Monomial::one();
        if dr > dq {
            shift.powers.insert(x.clone(), dr - dq);
        }
        r = r
            .mul(&lq)
            .sub(&q.mul(&lr).mul_monomial(&shift, &Coef::one()));
        let new_dr = degree(&r, x);
        if !r.is_zero() && new_dr >= dr {
            // Leading term must strictly drop; guards against order bugs.
            panic!("pseudo-division failed to reduce degree");
        }
        dr = new_dr;
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::atom::Atom;

    fn var(name: &str) -> Poly {
        Poly::from_atom(Atom::var(name))
    }

    #[test]
    fn exact_division_univariate() {
        let y = var("y");
        let z = var("z");
        // (y + z)^2 / (y + z) = y + z
        let s = y.add(&z);
        let sq = s.mul(&s);
        assert_eq!(divide_exact(&sq, &s), Some(s.clone()));
        // y*z not divisible by y+z
        assert_eq!(divide_exact(&y.mul(&z), &s), None);
    }

    #[test]
    fn gcd_common_factor() {
        let y = var("y");
        let z = var("z");
        let s = y.add(&z); // y + z
        let a = s.mul(&y); // y^2 + yz
        let b = s.mul(&z); // yz + z^2
        let g = poly_gcd(&a, &b);
        assert_eq!(g, s.integer_normalized());
    }

    #[test]
    fn gcd_coprime_is_constant() {
        let y = var("y");
        let z = var("z");
        let g = poly_gcd(&y, &z);
        assert!(g.is_one());
    }

    #[test]
    fn gcd_monomial_content() {
        let y = var("y");
        let z = var("z");
        // gcd(y^2 z, y z^2) = y z
        let a = y.mul(&y).mul(&z);
        let b = y.mul(&z).mul(&z);
        assert_eq!(poly_gcd(&a, &b), y.mul(&z));
    }
}
