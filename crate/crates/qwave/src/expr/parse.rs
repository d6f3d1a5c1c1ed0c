//! Recursive-descent parser for the expression DSL.
//!
//! Grammar:
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ['^' ['-'] integer]
//! base   := number | '(' expr ')' | 'exp' '(' expr ')' | 'log' '(' expr ')'
//!         | ident ['(' expr (',' expr)* ')']
//! ident  := name ['_' suffix]
//! ```
//!
//! The underscore suffix encodes a derivative multi-index, one step per
//! variable name: `T_yz` is the mixed second derivative of `T`, `u_zz` is a
//! jet variable. Suffix steps are the single characters `y z u w` (with `w`
//! an alias for `omega`), the unicode `ω`, or the word `omega`.
//!
//! Function dependency lists come from a declaration table; applications of
//! undeclared names to plain variables declare them implicitly, so
//! `s(y,z) + d(y,z)` works without a header.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::pow::Pow;

use super::canon::normalize_name;
use super::{Expr, ExprError, FunctionSymbol};

/// Declared function symbols: name -> dependency list.
#[derive(Clone, Debug, Default)]
pub struct DeclTable {
    funcs: BTreeMap<String, Vec<String>>,
}

impl DeclTable {
    pub fn new() -> Self {
        DeclTable::default()
    }

    /// The symbols used throughout the workbench: the operator coefficients
    /// `K, L` and right side `f` on `(y,z,u)`, the generating function `T`
    /// and the coefficient pair `s, d` on `(y,z)`, the reduced unknown
    /// `phi(omega)`, and the original right side `F(t,x,u)`.
    pub fn standard() -> Self {
        let mut t = DeclTable::new();
        for name in ["K", "L", "f"] {
            t.declare(name, &["y", "z", "u"]).unwrap();
        }
        for name in ["T", "s", "d"] {
            t.declare(name, &["y", "z"]).unwrap();
        }
        t.declare("phi", &["omega"]).unwrap();
        t.declare("F", &["t", "x", "u"]).unwrap();
        t
    }

    pub fn declare(&mut self, name: &str, deps: &[&str]) -> Result<(), ParseError> {
        let name = normalize_name(name);
        let deps: Vec<String> = deps.iter().map(|d| normalize_name(d)).collect();
        if name == "u" || name == "exp" || name == "log" {
            return Err(ParseError::ReservedName { name, offset: 0 });
        }
        if let Some(prev) = self.funcs.get(&name) {
            if *prev != deps {
                return Err(ParseError::ConflictingDeclaration { name, offset: 0 });
            }
        }
        self.funcs.insert(name, deps);
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<&Vec<String>> {
        self.funcs.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function '{name}' at byte {offset}: {given} arguments given, {expected} declared")]
    ArityMismatch {
        name: String,
        offset: usize,
        given: usize,
        expected: usize,
    },
    #[error("invalid derivative suffix '{suffix}' at byte {offset}")]
    BadSuffix { suffix: String, offset: usize },
    #[error("name '{name}' is reserved")]
    ReservedName { name: String, offset: usize },
    #[error("conflicting declaration for '{name}'")]
    ConflictingDeclaration { name: String, offset: usize },
    #[error(transparent)]
    Canon(#[from] ExprError),
}

/// Parse and canonicalize.
///
/// ```
/// use qwave::{parse, DeclTable};
/// let d = DeclTable::standard();
/// let e = parse("(y+z)^2 - y^2 - 2*y*z - z^2", &d).unwrap();
/// assert!(e.is_zero_literal());
/// assert_eq!(parse("T_y/T_z", &d).unwrap().to_dsl(), "T_y/T_z");
/// ```
pub fn parse(text: &str, decls: &DeclTable) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        decls,
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        let off = p.tokens[p.pos].offset;
        return Err(ParseError::Syntax {
            offset: off,
            message: "trailing input".into(),
        });
    }
    Ok(e.simplify()?)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                out.push(Token {
                    tok: Tok::Plus,
                    offset: off,
                });
                i += 1;
            }
            '-' => {
                out.push(Token {
                    tok: Tok::Minus,
                    offset: off,
                });
                i += 1;
            }
            '*' => {
                out.push(Token {
                    tok: Tok::Star,
                    offset: off,
                });
                i += 1;
            }
            '/' => {
                out.push(Token {
                    tok: Tok::Slash,
                    offset: off,
                });
                i += 1;
            }
            '^' => {
                out.push(Token {
                    tok: Tok::Caret,
                    offset: off,
                });
                i += 1;
            }
            '(' => {
                out.push(Token {
                    tok: Tok::LParen,
                    offset: off,
                });
                i += 1;
            }
            ')' => {
                out.push(Token {
                    tok: Tok::RParen,
                    offset: off,
                });
                i += 1;
            }
            ',' => {
                out.push(Token {
                    tok: Tok::Comma,
                    offset: off,
                });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                let mut seen_dot = false;
                while i < chars.len() {
                    match chars[i].1 {
                        '0'..='9' => i += 1,
                        '.' if !seen_dot => {
                            seen_dot = true;
                            i += 1;
                        }
                        _ => break,
                    }
                }
                let s: String = chars[start..i].iter().map(|(_, c)| *c).collect();
                let num = parse_number(&s).ok_or(ParseError::Syntax {
                    offset: off,
                    message: format!("malformed number '{s}'"),
                })?;
                out.push(Token {
                    tok: Tok::Num(num),
                    offset: off,
                });
            }
            c if c.is_alphabetic() => {
                let start = i;
                while i < chars.len() {
                    let ch = chars[i].1;
                    if ch.is_alphanumeric() || ch == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let s: String = chars[start..i].iter().map(|(_, c)| *c).collect();
                out.push(Token {
                    tok: Tok::Ident(s),
                    offset: off,
                });
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: off,
                    message: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(out)
}

fn parse_number(s: &str) -> Option<BigRational> {
    if let Some(dot) = s.find('.') {
        let int_part = &s[..dot];
        let frac_part = &s[dot + 1..];
        if frac_part.is_empty() && int_part.is_empty() {
            return None;
        }
        let digits: String = format!("{int_part}{frac_part}");
        let n: BigInt = digits.parse().ok()?;
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        Some(BigRational::new(n, den))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(BigRational::from_integer(n))
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    decls: &'a DeclTable,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.offset)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut negate = false;
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            negate = true;
        }
        let mut acc = self.term()?;
        if negate {
            acc = -acc;
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc + t;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc - t;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = acc * f;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = acc / f;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let mut sign = 1i64;
            if self.peek() == Some(&Tok::Minus) {
                self.pos += 1;
                sign = -1;
            }
            let off = self.offset();
            match self.bump() {
                Some(Tok::Num(n)) if n.is_integer() => {
                    let k: i64 = num_traits::ToPrimitive::to_i64(&n.to_integer()).ok_or(
                        ParseError::Syntax {
                            offset: off,
                            message: "exponent too large".into(),
                        },
                    )?;
                    Ok(Expr::Pow(Box::new(base), sign * k))
                }
                _ => Err(ParseError::Syntax {
                    offset: off,
                    message: "expected integer exponent after '^'".into(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let off = self.offset();
        match self.bump() {
            Some(Tok::Num(n)) => {
                if n.is_integer() {
                    Ok(Expr::Int(n.to_integer()))
                } else {
                    Ok(Expr::Rat(n))
                }
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => self.ident(name, off),
            other => Err(ParseError::Syntax {
                offset: off,
                message: format!("expected expression, found {other:?}"),
            }),
        }
    }

    fn ident(&mut self, raw: String, off: usize) -> Result<Expr, ParseError> {
        let (head, suffix) = match raw.find('_') {
            Some(i) => (raw[..i].to_string(), Some(raw[i + 1..].to_string())),
            None => (raw, None),
        };
        let head = normalize_name(&head);

        if head == "exp" || head == "log" {
            if suffix.is_some() {
                return Err(ParseError::Syntax {
                    offset: off,
                    message: format!("'{head}' takes no derivative suffix"),
                });
            }
            self.expect(Tok::LParen, "'('")?;
            let arg = self.expr()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(if head == "exp" {
                Expr::exp(arg)
            } else {
                Expr::log(arg)
            });
        }

        let steps = match &suffix {
            Some(s) => Some(parse_suffix(s, off)?),
            None => None,
        };

        // The dependent variable and its jets.
        if head == "u" {
            return match steps {
                None => Ok(Expr::var("u")),
                Some(steps) => {
                    let mut dy = 0u8;
                    let mut dz = 0u8;
                    for st in &steps {
                        match st.as_str() {
                            "y" => dy += 1,
                            "z" => dz += 1,
                            other => {
                                return Err(ParseError::BadSuffix {
                                    suffix: format!("u_{other}"),
                                    offset: off,
                                })
                            }
                        }
                    }
                    Ok(Expr::Jet { dy, dz })
                }
            };
        }

        // Explicit argument list?
        let args = if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
                args.push(self.expr()?);
            }
            self.expect(Tok::RParen, "')'")?;
            Some(args)
        } else {
            None
        };

        let declared = self.decls.lookup(&head).cloned();
        let deps: Vec<String> = match (&declared, &args) {
            (Some(d), _) => d.clone(),
            (None, Some(a)) => {
                // Implicit declaration: every argument must be a plain variable.
                let mut deps = Vec::with_capacity(a.len());
                for arg in a {
                    match arg {
                        Expr::Var(v) => deps.push(v.clone()),
                        _ => {
                            return Err(ParseError::UnknownFunction {
                                name: head,
                                offset: off,
                            })
                        }
                    }
                }
                deps
            }
            (None, None) => {
                // Bare undeclared name: a variable, unless it carries a
                // derivative suffix.
                return match steps {
                    None => Ok(Expr::Var(head)),
                    Some(_) => Err(ParseError::UnknownFunction {
                        name: head,
                        offset: off,
                    }),
                };
            }
        };

        if let Some(a) = &args {
            if a.len() != deps.len() {
                return Err(ParseError::ArityMismatch {
                    name: head,
                    offset: off,
                    given: a.len(),
                    expected: deps.len(),
                });
            }
        }

        // Derivative multi-index from the suffix; a step on a variable
        // outside the dependency list is the zero expression.
        let mut index = vec![0u32; deps.len()];
        if let Some(steps) = steps {
            for st in steps {
                match deps.iter().position(|d| *d == st) {
                    Some(i) => index[i] += 1,
                    None => return Ok(Expr::zero()),
                }
            }
        }

        let sym = FunctionSymbol { name: head, deps };
        Ok(Expr::Func { sym, index, args })
    }
}

/// Split a derivative suffix into variable-name steps.
fn parse_suffix(s: &str, off: usize) -> Result<Vec<String>, ParseError> {
    let mut steps = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('_') {
            rest = r;
            continue;
        }
        if let Some(r) = rest.strip_prefix("omega") {
            steps.push("omega".to_string());
            rest = r;
            continue;
        }
        let c = rest.chars().next().unwrap();
        let step = match c {
            'y' => "y",
            'z' => "z",
            'u' => "u",
            'w' | '\u{03c9}' => "omega",
            't' => "t",
            'x' => "x",
            _ => {
                return Err(ParseError::BadSuffix {
                    suffix: s.to_string(),
                    offset: off,
                });
            }
        };
        steps.push(step.to_string());
        rest = &rest[c.len_utf8()..];
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_parse(s: &str) -> Expr {
        parse(s, &DeclTable::standard()).unwrap()
    }

    #[test]
    fn quotient_of_function_derivatives() {
        let e = std_parse("T_y/T_z");
        let expect = (Expr::func_d("T", &["y", "z"], &[1, 0])
            / Expr::func_d("T", &["y", "z"], &[0, 1]))
        .simplify()
        .unwrap();
        assert_eq!(e, expect);
    }

    #[test]
    fn implicit_declaration_via_application() {
        let e = std_parse("exp(u)*s(y,z) + d(y,z)");
        let expect = (Expr::exp(Expr::var("u")) * Expr::func("s", &["y", "z"])
            + Expr::func("d", &["y", "z"]))
        .simplify()
        .unwrap();
        assert_eq!(e, expect);
    }

    #[test]
    fn jet_power_product() {
        let e = std_parse("u_z^2 * K_u");
        let expect = (Expr::pow(Expr::jet(0, 1), 2)
            * Expr::func_d("K", &["y", "z", "u"], &[0, 0, 1]))
        .simplify()
        .unwrap();
        assert_eq!(e, expect);
    }

    #[test]
    fn syntax_error_carries_offset() {
        let err = parse("y + ", &DeclTable::standard()).unwrap_err();
        match err {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_detected() {
        let err = parse("T(y)", &DeclTable::standard()).unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { .. }));
    }

    #[test]
    fn suffix_outside_dependencies_is_zero() {
        assert_eq!(std_parse("T_u"), Expr::zero());
    }

    #[test]
    fn unicode_aliases() {
        let a = std_parse("phi_\u{03c9}\u{03c9}");
        let b = std_parse("phi_ww");
        let c = std_parse("phi_omegaomega");
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn unary_minus_and_decimal() {
        let e = std_parse("-0.5*y");
        let expect = (Expr::ratio(-1, 2) * Expr::var("y")).simplify().unwrap();
        assert_eq!(e, expect);
    }
}
