#![allow(dead_code)]

//! Shared helpers for the integration suites: a seeded random expression
//! generator and a float-pipeline evaluator for determining-system members.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qwave::expr::canon::canon;
use qwave::expr::Expr;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random expression over y, z, u. With `closed = false` the corpus also
/// draws opaque function applications (useful for structural properties
/// that never evaluate numerically).
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32, closed: bool) -> Expr {
    if depth == 0 {
        return match rng.gen_range(0..5) {
            0 => Expr::int(rng.gen_range(-3..=3)),
            1 => Expr::var("y"),
            2 => Expr::var("z"),
            3 => Expr::var("u"),
            _ => {
                if closed {
                    Expr::int(rng.gen_range(1..=4))
                } else {
                    random_func(rng)
                }
            }
        };
    }
    match rng.gen_range(0..10) {
        0..=2 => {
            let n = rng.gen_range(2..=3);
            Expr::Sum(
                (0..n)
                    .map(|_| random_expr(rng, depth - 1, closed))
                    .collect(),
            )
        }
        3..=5 => {
            let n = rng.gen_range(2..=2);
            Expr::Prod(
                (0..n)
                    .map(|_| random_expr(rng, depth - 1, closed))
                    .collect(),
            )
        }
        // Powers stay off exp subtrees: exp towers reach magnitudes where
        // the central-difference comparison drowns in rounding.
        6 => Expr::pow(random_pow_base(rng, closed), rng.gen_range(2..=3)),
        7 if depth == 1 => {
            // Single-level quotient with a denominator bounded away from
            // zero on the sampling box [1,2]^3.
            let den = match rng.gen_range(0..4) {
                0 => Expr::var("y"),
                1 => Expr::var("z"),
                2 => (Expr::var("y") + Expr::var("z")).simplify().unwrap(),
                _ => (Expr::var("u") + Expr::int(rng.gen_range(1..=3)))
                    .simplify()
                    .unwrap(),
            };
            random_expr(rng, depth - 1, closed) / den
        }
        8 => {
            // exp of a small linear combination keeps values tame.
            let arg = match rng.gen_range(0..3) {
                0 => Expr::var("u"),
                1 => (Expr::var("y") - Expr::var("z")).simplify().unwrap(),
                _ => Expr::int(rng.gen_range(-1..=1)) * Expr::var("u"),
            };
            Expr::exp(arg)
        }
        _ => random_expr(rng, depth - 1, closed),
    }
}

fn random_pow_base(rng: &mut ChaCha8Rng, closed: bool) -> Expr {
    match rng.gen_range(0..4) {
        0 => Expr::var("y"),
        1 => Expr::var("z"),
        2 => (Expr::var("u") + Expr::int(rng.gen_range(-1..=2)))
            .simplify()
            .unwrap(),
        _ => {
            if closed {
                (Expr::var("y") + Expr::var("z")).simplify().unwrap()
            } else {
                random_func(rng)
            }
        }
    }
}

fn random_func(rng: &mut ChaCha8Rng) -> Expr {
    match rng.gen_range(0..4) {
        0 => Expr::func_d(
            "T",
            &["y", "z"],
            &[rng.gen_range(0..=1), rng.gen_range(0..=1)],
        ),
        1 => Expr::func_d(
            "K",
            &["y", "z", "u"],
            &[rng.gen_range(0..=1), 0, rng.gen_range(0..=1)],
        ),
        2 => Expr::func_d(
            "L",
            &["y", "z", "u"],
            &[0, rng.gen_range(0..=1), rng.gen_range(0..=1)],
        ),
        _ => Expr::func("f", &["y", "z", "u"]),
    }
}

pub fn random_point(rng: &mut ChaCha8Rng) -> BTreeMap<String, f64> {
    let mut p = BTreeMap::new();
    for v in ["y", "z", "u"] {
        p.insert(v.to_string(), rng.gen_range(1.0..2.0));
    }
    p
}

/// Evaluate a determining-system member through the float pipeline: each
/// opaque function application is resolved by compiling the corresponding
/// derivative of its binding, and the member polynomial is then summed in
/// f64 arithmetic. This is an independent numeric route: no symbolic
/// cancellation happens before the float sum.
pub struct MemberEvaluator {
    member: qwave::RatFunc,
    tables: BTreeMap<(String, Vec<u32>), Expr>,
}

impl MemberEvaluator {
    pub fn new(member: &Expr, bindings: &[(&str, &[&str], Expr)]) -> MemberEvaluator {
        let member = canon(member).expect("member canonicalizes");
        let mut tables = BTreeMap::new();
        let mut atoms = Vec::new();
        collect_func_atoms(&member, &mut atoms);
        for fa in atoms {
            let Some((_, deps, body)) = bindings.iter().find(|(n, _, _)| *n == fa.name) else {
                panic!("no binding for function '{}'", fa.name);
            };
            let mut d = body.clone();
            for (dep, &k) in deps.iter().zip(&fa.index) {
                for _ in 0..k {
                    d = d.diff(dep).expect("binding differentiable");
                }
            }
            tables.insert((fa.name.clone(), fa.index.clone()), d);
        }
        MemberEvaluator { member, tables }
    }

    pub fn eval(&self, point: &BTreeMap<String, f64>) -> f64 {
        let num = self.eval_poly(self.member.num(), point);
        let den = self.eval_poly(self.member.den(), point);
        num / den
    }

    fn eval_poly(&self, p: &qwave::expr::poly::Poly, point: &BTreeMap<String, f64>) -> f64 {
        use num_traits::ToPrimitive;
        let mut acc = 0.0f64;
        for (m, c) in &p.terms {
            let mut t = c.to_f64().unwrap();
            for (a, &k) in &m.powers {
                let v = self.eval_atom(a, point);
                t *= v.powi(k as i32);
            }
            if let Some(g) = &m.exparg {
                let gv = {
                    let num = self.eval_poly(g.num(), point);
                    let den = self.eval_poly(g.den(), point);
                    num / den
                };
                t *= gv.exp();
            }
            acc += t;
        }
        acc
    }

    fn eval_atom(&self, a: &qwave::expr::atom::Atom, point: &BTreeMap<String, f64>) -> f64 {
        use qwave::expr::atom::Atom;
        match a {
            Atom::Var(v) => *point.get(v).expect("bound variable"),
            Atom::Func(fa) => {
                let d = self
                    .tables
                    .get(&(fa.name.clone(), fa.index.clone()))
                    .expect("prepared binding");
                d.eval_at(point, &qwave::Bindings::new())
                    .expect("evaluable")
            }
            other => panic!("unexpected atom in member: {other:?}"),
        }
    }
}

fn collect_func_atoms(r: &qwave::RatFunc, out: &mut Vec<qwave::expr::atom::FuncAtom>) {
    for p in [r.num(), r.den()] {
        for m in p.terms.keys() {
            for a in m.powers.keys() {
                if let qwave::expr::atom::Atom::Func(fa) = a {
                    if !out.contains(fa) {
                        out.push(fa.clone());
                    }
                }
            }
            if let Some(g) = &m.exparg {
                collect_func_atoms(g, out);
            }
        }
    }
}
