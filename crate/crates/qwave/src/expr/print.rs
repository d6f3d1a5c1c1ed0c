//! Deterministic printer for the expression DSL.
//!
//! Canonical trees print to text that reparses to a structurally equal
//! tree. Derivative indices print as underscore suffixes (`T_yz`), jets as
//! `u_yz`, and negative powers inside products as division.

use num_traits::Signed;

use super::Expr;

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write(e, Prec::Sum, &mut s);
    s
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Prod,
    Pow,
    Atom,
}

fn write(e: &Expr, ctx: Prec, out: &mut String) {
    match e {
        Expr::Int(n) => {
            if n.is_negative() && ctx > Prec::Sum {
                out.push('(');
                out.push_str(&n.to_string());
                out.push(')');
            } else {
                out.push_str(&n.to_string());
            }
        }
        Expr::Rat(r) => {
            let inner = format!("{}/{}", r.numer(), r.denom());
            if ctx > Prec::Sum {
                out.push('(');
                out.push_str(&inner);
                out.push(')');
            } else {
                out.push_str(&inner);
            }
        }
        Expr::Var(v) => out.push_str(v),
        Expr::Jet { dy, dz } => {
            out.push_str("u_");
            for _ in 0..*dy {
                out.push('y');
            }
            for _ in 0..*dz {
                out.push('z');
            }
        }
        Expr::Func { sym, index, args } => {
            out.push_str(&sym.name);
            let mut suffix = String::new();
            for (dep, &k) in sym.deps.iter().zip(index) {
                for _ in 0..k {
                    suffix.push_str(dep);
                }
            }
            if !suffix.is_empty() {
                out.push('_');
                out.push_str(&suffix);
            }
            if let Some(args) = args {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write(a, Prec::Sum, out);
                }
                out.push(')');
            }
        }
        Expr::Sum(items) => {
            let wrap = ctx > Prec::Sum;
            if wrap {
                out.push('(');
            }
            for (i, item) in items.iter().enumerate() {
                if i == 0 {
                    write(item, Prec::Sum, out);
                    continue;
                }
                // Render a leading negative coefficient as subtraction.
                if let Some(pos) = strip_leading_minus(item) {
                    out.push_str(" - ");
                    write(&pos, Prec::Prod, out);
                } else {
                    out.push_str(" + ");
                    write(item, Prec::Prod, out);
                }
            }
            if wrap {
                out.push(')');
            }
        }
        Expr::Prod(items) => {
            let wrap = ctx > Prec::Prod;
            if wrap {
                out.push('(');
            }
            write_product(items, out);
            if wrap {
                out.push(')');
            }
        }
        Expr::Pow(base, k) => {
            if *k < 0 {
                // Standalone reciprocal: 1/base^|k|
                out.push_str("1/");
                write_pow(base, k.unsigned_abs(), out);
            } else {
                write_pow(base, *k as u64, out);
            }
        }
        Expr::Exp(arg) => {
            out.push_str("exp(");
            write(arg, Prec::Sum, out);
            out.push(')');
        }
        Expr::Log(arg) => {
            out.push_str("log(");
            write(arg, Prec::Sum, out);
            out.push(')');
        }
    }
}

fn write_pow(base: &Expr, k: u64, out: &mut String) {
    if k == 1 {
        write(base, Prec::Pow, out);
        return;
    }
    write(base, Prec::Atom, out);
    out.push('^');
    out.push_str(&k.to_string());
}

fn write_product(items: &[Expr], out: &mut String) {
    let mut numer: Vec<&Expr> = Vec::new();
    let mut denom: Vec<(&Expr, u64)> = Vec::new();
    let mut neg_one = false;
    for item in items {
        match item {
            Expr::Pow(base, k) if *k < 0 => denom.push((base, k.unsigned_abs())),
            Expr::Int(n) if *n == num_bigint::BigInt::from(-1) && items.len() > 1 => {
                neg_one = true;
            }
            _ => numer.push(item),
        }
    }
    if neg_one {
        out.push('-');
    }
    if numer.is_empty() {
        out.push('1');
    } else {
        for (i, item) in numer.iter().enumerate() {
            if i > 0 {
                out.push('*');
            }
            write(item, Prec::Prod, out);
        }
    }
    for (base, k) in denom {
        out.push('/');
        write_pow(base, k, out);
    }
}

/// If the expression is a product with leading coefficient -1 or a negative
/// number, return its positive counterpart.
fn strip_leading_minus(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Int(n) if n.is_negative() => Some(Expr::Int(-n.clone())),
        Expr::Rat(r) if r.is_negative() => Some(Expr::Rat(-r.clone())),
        Expr::Prod(items) => match items.first() {
            Some(Expr::Int(n)) if *n == num_bigint::BigInt::from(-1) => {
                let rest: Vec<Expr> = items[1..].to_vec();
                Some(if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr::Prod(rest)
                })
            }
            Some(Expr::Int(n)) if n.is_negative() => {
                let mut rest = items.clone();
                rest[0] = Expr::Int(-n.clone());
                Some(Expr::Prod(rest))
            }
            Some(Expr::Rat(r)) if r.is_negative() => {
                let mut rest = items.clone();
                rest[0] = Expr::Rat(-r.clone());
                Some(Expr::Prod(rest))
            }
            _ => None,
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, DeclTable};

    fn roundtrip(s: &str) {
        let decls = DeclTable::standard();
        let e = parse(s, &decls).unwrap();
        let printed = e.to_dsl();
        let back = parse(&printed, &decls).unwrap();
        assert_eq!(e, back, "print/parse mismatch: {s} -> {printed}");
    }

    #[test]
    fn roundtrips() {
        for s in [
            "T_y/T_z",
            "exp(u)*s(y,z) + d(y,z)",
            "u_z^2 * K_u",
            "1/(y+z)",
            "-K_u^2 + K_uu*K",
            "(y+z)^2 - y^2 - 2*y*z - z^2",
            "y*f_y + z*f_z + u*f_u + f",
            "exp(u)*exp(-u)",
            "2/3 * y",
            "log(y+z)",
            "u_yz - f",
            "phi_ww(y/z)",
        ] {
            roundtrip(s);
        }
    }

    #[test]
    fn canonical_print_is_stable() {
        let decls = DeclTable::standard();
        let a = parse("z*y + y^2", &decls).unwrap();
        let b = parse("y^2 + y*z", &decls).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_dsl(), b.to_dsl());
    }

    #[test]
    fn negative_coefficients_render_as_subtraction() {
        let decls = DeclTable::standard();
        let e = parse("y - z", &decls).unwrap();
        let s = e.to_dsl();
        assert!(s == "y - z" || s == "-z + y", "got {s}");
        roundtrip("y - z");
    }

    #[test]
    fn reciprocal_prints_with_division() {
        let decls = DeclTable::standard();
        let e = parse("1/y", &decls).unwrap();
        assert_eq!(e.to_dsl(), "1/y");
        let e = parse("T_y/T_z", &decls).unwrap();
        assert_eq!(e, parse(&e.to_dsl(), &decls).unwrap());
    }

    #[test]
    fn writes_quotient_of_sums() {
        let decls = DeclTable::standard();
        let e = parse("(y+z)/(y-z)", &decls).unwrap();
        let back = parse(&e.to_dsl(), &decls).unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn prints_composition() {
        let decls = DeclTable::standard();
        let e = parse("phi_w(y/z)", &decls).unwrap();
        let s = e.to_dsl();
        assert!(s.contains("phi_omega"), "got {s}");
        assert_eq!(e, parse(&s, &decls).unwrap());
    }
}
