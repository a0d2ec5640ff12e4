//! Minimal s-expression reader with source positions.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SexpKind {
    Atom(String),
    List(Vec<Sexp>),
}

/// An s-expression with the 1-based position of its first character.
#[derive(Debug, Clone)]
pub struct Sexp {
    pub kind: SexpKind,
    pub line: usize,
    pub col: usize,
}

/// Positions are ignored by equality.
impl PartialEq for Sexp {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Sexp {}

impl Sexp {
    pub fn atom(s: &str) -> Self {
        Sexp {
            kind: SexpKind::Atom(s.to_string()),
            line: 0,
            col: 0,
        }
    }

    pub fn list(items: Vec<Sexp>) -> Self {
        Sexp {
            kind: SexpKind::List(items),
            line: 0,
            col: 0,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(s) => Some(s),
            SexpKind::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match &self.kind {
            SexpKind::List(items) => Some(items),
            SexpKind::Atom(_) => None,
        }
    }

    /// For `(head args..)`, the head symbol and the arguments.
    pub fn as_form(&self) -> Option<(&str, &[Sexp])> {
        let items = self.as_list()?;
        let (head, rest) = items.split_first()?;
        Some((head.as_atom()?, rest))
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str> {
        self.as_atom()
            .ok_or_else(|| self.error(format!("expected {what}, found a list")))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexp]> {
        self.as_list()
            .ok_or_else(|| self.error(format!("expected {what}, found `{self}`")))
    }

    pub fn expect_nat(&self) -> Result<u64> {
        let s = self.expect_atom("a natural number")?;
        s.parse()
            .map_err(|_| self.error(format!("expected a natural number, found `{s}`")))
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SexpKind::Atom(s) => f.write_str(s),
            SexpKind::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Reads every top-level expression in `text`. `;` starts a line comment.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>> {
    let mut reader = Reader {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        reader.skip_ws();
        if reader.peek().is_none() {
            return Ok(out);
        }
        out.push(reader.read()?);
    }
}

/// Reads exactly one expression.
pub fn parse_one(text: &str) -> Result<Sexp> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        0 => Err(Error::Parse {
            line: 1,
            col: 1,
            msg: "empty input".into(),
        }),
        _ => Err(all[1].error("expected a single expression")),
    }
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Reader {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_ws();
        let (line, col) = (self.line, self.col);
        match self.peek() {
            None => Err(Error::Parse {
                line,
                col,
                msg: "unexpected end of input".into(),
            }),
            Some(')') => Err(Error::Parse {
                line,
                col,
                msg: "unexpected `)`".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => {
                            return Err(Error::Parse {
                                line,
                                col,
                                msg: "unclosed `(`".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp {
                                kind: SexpKind::List(items),
                                line,
                                col,
                            });
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Sexp {
                    kind: SexpKind::Atom(s),
                    line,
                    col,
                })
            }
        }
    }
}
