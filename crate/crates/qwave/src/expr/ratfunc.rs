//! Canonical rational functions `num/den` over the atom polynomial ring.
//!
//! Normal form invariants:
//! - `den` is never zero; if `num` is zero, `den` is one.
//! - `num/den` is reduced by the polynomial gcd (exp layers handled as
//!   units, see [`super::gcd`]).
//! - `den`'s leading monomial carries no exp factor (exp factors are pushed
//!   into `num`), and its leading coefficient is one.
//!
//! Equality of normal forms is used as the symbolic zero test for the whole
//! crate: atoms are algebraically independent generators, so a nonzero
//! normal form denotes a nonzero function.

use num_traits::One;

use super::gcd::{divide_exact, poly_gcd};
use super::poly::{Coef, Monomial, Poly};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

/// Arithmetic error surfaced during canonicalization.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("division by an identically zero expression")]
    DivisionByZero,
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        RatFunc {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn constant(c: Coef) -> Self {
        RatFunc {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc::new(p, Poly::one()).expect("unit denominator")
    }

    pub fn from_atom(a: super::atom::Atom) -> Self {
        RatFunc::from_poly(Poly::from_atom(a))
    }

    /// `exp(arg)` as a rational function.
    pub fn exp_of(arg: RatFunc) -> Self {
        RatFunc::from_poly(Poly::from_monomial(Monomial::exp_of(arg), Coef::one()))
    }

    /// Build and normalize.
    pub fn new(num: Poly, den: Poly) -> Result<Self, ArithError> {
        if den.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(RatFunc::zero());
        }
        let (mut num, mut den) = (num, den);
        // 1. Exp factors out of the denominator's leading monomial.
        normalize_exp(&mut num, &mut den);
        // 2. Reduce by the gcd (skipped for unit denominators).
        if !den.is_one() {
            let g = poly_gcd(&num, &den);
            if !g.is_one() && !g.is_zero() {
                if let (Some(nq), Some(dq)) = (divide_exact(&num, &g), divide_exact(&den, &g)) {
                    num = nq;
                    den = dq;
                }
            }
        }
        // The reduced denominator may expose a new leading monomial.
        normalize_exp(&mut num, &mut den);
        // 3. Scale so den's leading coefficient is one.
        let lc = den.leading().map(|(_, c)| c.clone()).expect("den nonzero");
        if !lc.is_one() {
            let inv = Coef::one() / lc;
            num = num.mul_scalar(&inv);
            den = den.mul_scalar(&inv);
        }
        Ok(RatFunc { num, den })
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Coef> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return RatFunc::new(self.num.add(&other.num), self.den.clone())
                .expect("nonzero denominator");
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RatFunc::new(num, den).expect("nonzero denominators")
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        RatFunc::new(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("nonzero denominators")
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc, ArithError> {
        if other.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        RatFunc::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn recip(&self) -> Result<RatFunc, ArithError> {
        RatFunc::one().div(self)
    }

    pub fn scale(&self, c: &Coef) -> RatFunc {
        RatFunc::new(self.num.mul_scalar(c), self.den.clone()).expect("den unchanged")
    }

    pub fn powi(&self, k: i64) -> Result<RatFunc, ArithError> {
        if k == 0 {
            return Ok(RatFunc::one());
        }
        // Binary exponentiation; single-monomial cases stay cheap either
        // way because monomial powers scale exponents directly.
        let mut base = if k < 0 { self.recip()? } else { self.clone() };
        let mut exp = k.unsigned_abs();
        let mut out = RatFunc::one();
        while exp > 0 {
            if exp & 1 == 1 {
                out = out.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        Ok(out)
    }

    /// All atoms of numerator and denominator (top level only).
    pub fn atoms(&self) -> Vec<super::atom::Atom> {
        let mut v = self.num.atoms();
        for a in self.den.atoms() {
            if !v.contains(&a) {
                v.push(a);
            }
        }
        v
    }
}

/// Push the exp factor of `den`'s leading monomial into both sides so the
/// denominator's leading monomial is exp-free.
fn normalize_exp(num: &mut Poly, den: &mut Poly) {
    if let Some((m, _)) = den.leading() {
        if let Some(g) = m.exparg.clone() {
            let minus = g.as_ref().clone().neg();
            *num = num.shift_exp(&minus);
            *den = den.shift_exp(&minus);
        }
    }
}
