//! Sparse multivariate polynomials over the atoms of [`super::atom`].
//!
//! Coefficients are exact rationals. Each monomial optionally carries one
//! exponential factor `exp(g)` whose argument is a canonical rational
//! function; multiplying monomials adds the arguments, which realizes the
//! contraction `exp(a)*exp(b) -> exp(a+b)` and `exp(a)^n -> exp(n*a)` by
//! construction. Monomials are ordered by graded lexicographic order on the
//! atom exponents (exp factors break ties), which is compatible with
//! multiplication on the exp-free part and therefore safe for the division
//! and gcd routines in [`super::gcd`].

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::atom::Atom;
use super::ratfunc::RatFunc;

pub type Coef = BigRational;

pub fn coef_int(n: i64) -> Coef {
    BigRational::from_integer(BigInt::from(n))
}

pub fn coef_ratio(n: i64, d: i64) -> Coef {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A power product of atoms times an optional exponential factor.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Monomial {
    /// Atom exponents, all >= 1.
    pub powers: BTreeMap<Atom, u32>,
    /// Argument of the exponential factor; `None` means no factor.
    /// Invariant: never `Some(0)`.
    pub exparg: Option<Box<RatFunc>>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn atom(a: Atom) -> Self {
        let mut powers = BTreeMap::new();
        powers.insert(a, 1);
        Monomial {
            powers,
            exparg: None,
        }
    }

    pub fn exp_of(arg: RatFunc) -> Self {
        if arg.is_zero() {
            return Monomial::one();
        }
        Monomial {
            powers: BTreeMap::new(),
            exparg: Some(Box::new(arg)),
        }
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty() && self.exparg.is_none()
    }

    pub fn total_degree(&self) -> u32 {
        self.powers.values().sum()
    }

    pub fn degree_of(&self, a: &Atom) -> u32 {
        self.powers.get(a).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut powers = self.powers.clone();
        for (a, &k) in &other.powers {
            let e = powers.entry(a.clone()).or_insert(0);
            *e = e.checked_add(k).expect("monomial exponent overflow");
        }
        let exparg = add_expargs(&self.exparg, &other.exparg);
        Monomial { powers, exparg }
    }

    /// Raise to a positive power; exp argument scales linearly.
    pub fn pow(&self, k: u32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        let powers = self
            .powers
            .iter()
            .map(|(a, &e)| (a.clone(), e * k))
            .collect();
        let exparg = self
            .exparg
            .as_ref()
            .map(|g| Box::new(g.as_ref().clone().scale(&coef_int(k as i64))));
        Monomial { powers, exparg }
    }

    /// Whether `self` is divisible by `other` on the atom part. The exp
    /// part never obstructs division (exp factors are units).
    pub fn divisible_by(&self, other: &Monomial) -> bool {
        other.powers.iter().all(|(a, &k)| self.degree_of(a) >= k)
    }

    /// Quotient monomial; requires `divisible_by`.
    pub fn div(&self, other: &Monomial) -> Monomial {
        let mut powers = self.powers.clone();
        for (a, &k) in &other.powers {
            let e = powers.get_mut(a).expect("monomial division mismatch");
            debug_assert!(*e >= k);
            *e -= k;
            if *e == 0 {
                powers.remove(a);
            }
        }
        let neg = other
            .exparg
            .as_ref()
            .map(|g| Box::new(g.as_ref().clone().neg()));
        let exparg = add_expargs(&self.exparg, &neg);
        Monomial { powers, exparg }
    }

    /// Shift the exp argument by `delta` (used when normalizing fractions).
    pub fn shift_exp(&self, delta: &RatFunc) -> Monomial {
        if delta.is_zero() {
            return self.clone();
        }
        let d = Some(Box::new(delta.clone()));
        Monomial {
            powers: self.powers.clone(),
            exparg: add_expargs(&self.exparg, &d),
        }
    }

    /// Strip the exp factor, returning it separately.
    pub fn without_exp(&self) -> (Monomial, Option<Box<RatFunc>>) {
        (
            Monomial {
                powers: self.powers.clone(),
                exparg: None,
            },
            self.exparg.clone(),
        )
    }
}

fn add_expargs(a: &Option<Box<RatFunc>>, b: &Option<Box<RatFunc>>) -> Option<Box<RatFunc>> {
    match (a, b) {
        (None, None) => None,
        (Some(g), None) | (None, Some(g)) => Some(g.clone()),
        (Some(g1), Some(g2)) => {
            let s = g1.as_ref().clone().add(g2.as_ref());
            if s.is_zero() {
                None
            } else {
                Some(Box::new(s))
            }
        }
    }
}

/// Graded lexicographic comparison of the atom parts, exp argument as the
/// final tie-break so the order stays total.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // Lexicographic walk over the merged atom set (BTreeMap iterates in
        // ascending atom order; a higher exponent on an earlier atom wins).
        let mut it_a = self.powers.iter();
        let mut it_b = other.powers.iter();
        let (mut cur_a, mut cur_b) = (it_a.next(), it_b.next());
        loop {
            match (cur_a, cur_b) {
                (None, None) => break,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((a, ka)), Some((b, kb))) => match a.cmp(b) {
                    // Earlier atom present only on one side: that side has a
                    // positive exponent where the other has zero.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ka.cmp(kb) {
                        Ordering::Equal => {
                            cur_a = it_a.next();
                            cur_b = it_b.next();
                        }
                        ord => return ord,
                    },
                },
            }
        }
        self.exparg.cmp(&other.exparg)
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial: finite map monomial -> nonzero rational coefficient.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Coef>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Coef::one())
    }

    pub fn constant(c: Coef) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn from_atom(a: Atom) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::atom(a), Coef::one());
        Poly { terms }
    }

    pub fn from_monomial(m: Monomial, c: Coef) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .map(|(m, c)| m.is_one() && c.is_one())
                .unwrap_or(false)
    }

    /// The constant value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Coef> {
        if self.is_zero() {
            return Some(Coef::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_one() {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn add_term(&mut self, m: Monomial, c: Coef) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = e.get().clone() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn mul_scalar(&self, c: &Coef) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Coef) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, k)| (mm.mul(m), k * c))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut exp = k;
        while exp > 0 {
            if exp & 1 == 1 {
                out = out.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Leading (maximal) term under the monomial order.
    pub fn leading(&self) -> Option<(&Monomial, &Coef)> {
        self.terms.iter().next_back()
    }

    /// Degree in a single atom.
    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.terms.keys().map(|m| m.degree_of(a)).max().unwrap_or(0)
    }

    /// All atoms appearing in the polynomial (exp arguments not descended).
    pub fn atoms(&self) -> Vec<Atom> {
        let mut set = std::collections::BTreeSet::new();
        for m in self.terms.keys() {
            for a in m.powers.keys() {
                set.insert(a.clone());
            }
        }
        set.into_iter().collect()
    }

    pub fn has_exp(&self) -> bool {
        self.terms.keys().any(|m| m.exparg.is_some())
    }

    /// Shift every monomial's exp argument by `delta`.
    pub fn shift_exp(&self, delta: &RatFunc) -> Poly {
        if delta.is_zero() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.shift_exp(delta), c.clone()))
                .collect(),
        }
    }

    /// Group terms by their exp argument: layers of exp-free polynomials.
    pub fn exp_layers(&self) -> Vec<(Option<Box<RatFunc>>, Poly)> {
        let mut layers: Vec<(Option<Box<RatFunc>>, Poly)> = Vec::new();
        for (m, c) in &self.terms {
            let (bare, arg) = m.without_exp();
            match layers.iter_mut().find(|(g, _)| *g == arg) {
                Some((_, p)) => p.add_term(bare, c.clone()),
                None => {
                    layers.push((arg, Poly::from_monomial(bare, c.clone())));
                }
            }
        }
        layers
    }

    /// Collect coefficients by the powers of the given atoms; the returned
    /// map sends exponent vectors to the coefficient polynomial (which no
    /// longer contains those atoms).
    pub fn collect_by_atoms(&self, atoms: &[Atom]) -> BTreeMap<Vec<u32>, Poly> {
        let mut out: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut key = Vec::with_capacity(atoms.len());
            let mut rest = m.clone();
            for a in atoms {
                let k = rest.powers.remove(a).unwrap_or(0);
                key.push(k);
            }
            out.entry(key).or_default().add_term(rest, c.clone());
        }
        out
    }

    /// Normalize sign and integer content for display: scale so that all
    /// coefficients are coprime integers and the leading one is positive.
    pub fn integer_normalized(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            let d = c.denom();
            let g = num_integer_gcd(&den_lcm, d);
            den_lcm = &den_lcm / &g * d;
        }
        let scaled: Vec<BigInt> = self
            .terms
            .values()
            .map(|c| c.numer() * (&den_lcm / c.denom()))
            .collect();
        let mut content = BigInt::zero();
        for n in &scaled {
            content = num_integer_gcd(&content, n);
        }
        if content.is_zero() {
            content = BigInt::one();
        }
        let lead_neg = self
            .leading()
            .map(|(_, c)| c.is_negative())
            .unwrap_or(false);
        if lead_neg {
            content = -content;
        }
        let factor = BigRational::new(den_lcm, content);
        self.mul_scalar(&factor)
    }
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    use num_traits::Zero;
    let mut a = a.abs();
    let mut b = b.abs();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}
