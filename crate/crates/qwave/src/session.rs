//! Session files: declarations, definitions, and command lines.
//!
//! A session file is line-oriented: `#` starts a comment, `declare
//! name(dep, ...)` extends the function table (`;`-separated declarations
//! may share a line), `let name = expr` binds a reusable definition, and
//! any other nonempty line is a command for the CLI dispatcher.

use std::collections::BTreeMap;

use crate::expr::{parse, Bindings, DeclTable, Expr, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("line {line}: {err}")]
    Parse { line: usize, err: ParseError },
    #[error("line {line}: malformed declaration '{text}'")]
    BadDeclare { line: usize, text: String },
    #[error("line {line}: malformed definition '{text}'")]
    BadLet { line: usize, text: String },
    #[error("line {line}: definition '{name}' shadows an earlier one")]
    Redefinition { line: usize, name: String },
    #[error("definition '{name}' collides with a declared function symbol")]
    ShadowsFunction { name: String },
    #[error("substitution failed: {0}")]
    Subst(String),
}

/// One statement of a session file.
#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Declare {
        line_no: usize,
        name: String,
        deps: Vec<String>,
    },
    Let {
        line_no: usize,
        name: String,
        text: String,
    },
    Command {
        line_no: usize,
        text: String,
    },
}

/// Parsed declarations and definitions, ready to resolve expression text.
#[derive(Clone, Debug)]
pub struct Session {
    pub decls: DeclTable,
    pub defs: BTreeMap<String, Expr>,
    pub commands: Vec<(usize, String)>,
}

impl Default for Session {
    fn default() -> Self {
        Session {
            decls: DeclTable::standard(),
            defs: BTreeMap::new(),
            commands: Vec::new(),
        }
    }
}

impl Session {
    pub fn new() -> Self {
        Session::default()
    }

    /// Load a session file on top of the current state.
    pub fn load(&mut self, text: &str) -> Result<(), SessionError> {
        for stmt in split_statements(text)? {
            self.apply(stmt)?;
        }
        Ok(())
    }

    fn apply(&mut self, stmt: Statement) -> Result<(), SessionError> {
        match stmt {
            Statement::Declare {
                line_no,
                name,
                deps,
            } => {
                let deps: Vec<&str> = deps.iter().map(|s| s.as_str()).collect();
                self.decls
                    .declare(&name, &deps)
                    .map_err(|err| SessionError::Parse { line: line_no, err })?;
                Ok(())
            }
            Statement::Let {
                line_no,
                name,
                text,
            } => {
                if self.defs.contains_key(&name) {
                    return Err(SessionError::Redefinition {
                        line: line_no,
                        name,
                    });
                }
                if self.decls.lookup(&name).is_some() {
                    return Err(SessionError::ShadowsFunction { name });
                }
                let e = self
                    .resolve(&text)
                    .map_err(|err| SessionError::Parse { line: line_no, err })?;
                self.defs.insert(name, e);
                Ok(())
            }
            Statement::Command { line_no, text } => {
                self.commands.push((line_no, text));
                Ok(())
            }
        }
    }

    /// Parse expression text against the session declarations and expand
    /// `let` definitions.
    pub fn resolve(&self, text: &str) -> Result<Expr, ParseError> {
        let e = parse(text, &self.decls)?;
        if self.defs.is_empty() {
            return Ok(e);
        }
        let mut b = Bindings::new();
        for (name, def) in &self.defs {
            b.vars.insert(name.clone(), def.clone());
        }
        e.substitute(&b).map_err(|err| ParseError::Syntax {
            offset: 0,
            message: err.to_string(),
        })
    }
}

fn split_statements(text: &str) -> Result<Vec<Statement>, SessionError> {
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("declare") {
            for part in line.split(';') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                out.push(parse_declare(part, line_no)?);
            }
        } else if let Some(rest) = line.strip_prefix("let ") {
            let Some((name, expr)) = rest.split_once('=') else {
                return Err(SessionError::BadLet {
                    line: line_no,
                    text: line.to_string(),
                });
            };
            out.push(Statement::Let {
                line_no,
                name: name.trim().to_string(),
                text: expr.trim().trim_end_matches(';').to_string(),
            });
        } else {
            out.push(Statement::Command {
                line_no,
                text: line.to_string(),
            });
        }
    }
    Ok(out)
}

fn parse_declare(part: &str, line_no: usize) -> Result<Statement, SessionError> {
    let bad = || SessionError::BadDeclare {
        line: line_no,
        text: part.to_string(),
    };
    let rest = part.strip_prefix("declare").ok_or_else(bad)?.trim();
    let open = rest.find('(').ok_or_else(bad)?;
    let close = rest.rfind(')').ok_or_else(bad)?;
    if close < open {
        return Err(bad());
    }
    let name = rest[..open].trim().to_string();
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric()) {
        return Err(bad());
    }
    let deps: Vec<String> = rest[open + 1..close]
        .split(',')
        .map(|d| d.trim().to_string())
        .filter(|d| !d.is_empty())
        .collect();
    if deps.is_empty() {
        return Err(bad());
    }
    Ok(Statement::Declare {
        line_no,
        name,
        deps,
    })
}

/// Split a command line into shell-style tokens (double quotes group).
pub fn split_command(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    for c in line.chars() {
        match c {
            '"' => in_quotes = !in_quotes,
            c if c.is_whitespace() && !in_quotes => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
