use thiserror::Error;

use super::ast::{BinOp, CmpOp, Condition, Expr, UnaryFn, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{function}` at byte {offset} expects {expected} argument(s), got {found}")]
    Arity {
        function: String,
        expected: String,
        found: usize,
        offset: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Cmp(CmpOp),
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number {n}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Cmp(op) => format!("`{}`", op.symbol()),
        Tok::End => "end of input".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'^' => out.push((Tok::Caret, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b',' => out.push((Tok::Comma, start)),
            b'<' | b'>' => {
                let eq = bytes.get(i + 1) == Some(&b'=');
                let op = match (c, eq) {
                    (b'<', false) => CmpOp::Lt,
                    (b'<', true) => CmpOp::Le,
                    (_, false) => CmpOp::Gt,
                    (_, true) => CmpOp::Ge,
                };
                if eq {
                    i += 1;
                }
                out.push((Tok::Cmp(op), start));
            }
            b'=' => {
                if bytes.get(i + 1) != Some(&b'=') {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: "expected `==`".into(),
                    });
                }
                i += 1;
                out.push((Tok::Cmp(CmpOp::Eq), start));
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

/// Either an ordinary expression or a comparison; comparisons are only legal
/// as piecewise conditions.
enum Arg {
    Value(Expr),
    Cond(Condition),
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [Var],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {}", describe(self.peek())),
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    /// Unary minus binds looser than `^`: `-x^2` is `-(x^2)`.
    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, offset),
            other => {
                // Report at the offending token, not the one after it.
                self.pos -= usize::from(other != Tok::End);
                Err(self.unexpected("a number, variable, function call or `(`"))
            }
        }
    }

    fn ident(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if let Some(v) = Var::from_name(&name) {
            if !self.vars.contains(&v) {
                return Err(ParseError::UnknownIdentifier { name, offset });
            }
            return Ok(Expr::Var(v));
        }
        let unary = match name.as_str() {
            "abs" => Some(UnaryFn::Abs),
            "sqrt" => Some(UnaryFn::Sqrt),
            "exp" => Some(UnaryFn::Exp),
            "log" => Some(UnaryFn::Log),
            "sgn" => Some(UnaryFn::Sgn),
            "min" | "max" | "pw" => None,
            _ => return Err(ParseError::UnknownIdentifier { name, offset }),
        };
        if *self.peek() != Tok::LParen {
            return Err(self.unexpected(&format!("`(` after `{name}`")));
        }
        self.bump();
        let args = self.args()?;
        let arity = |expected: &str| ParseError::Arity {
            function: name.clone(),
            expected: expected.to_string(),
            found: args.len(),
            offset,
        };
        if let Some(f) = unary {
            if args.len() != 1 {
                return Err(arity("1"));
            }
            let a = values(args, offset)?;
            return Ok(Expr::unary(f, a.into_iter().next().unwrap()));
        }
        match name.as_str() {
            "min" | "max" => {
                if args.len() < 2 {
                    return Err(arity("at least 2"));
                }
                let op = if name == "min" { BinOp::Min } else { BinOp::Max };
                let mut it = values(args, offset)?.into_iter();
                let first = it.next().unwrap();
                Ok(it.fold(first, |acc, e| Expr::binary(op, acc, e)))
            }
            _ => {
                if args.len() < 3 || args.len() % 2 == 0 {
                    return Err(arity("an odd number >= 3"));
                }
                piecewise(args, offset)
            }
        }
    }

    fn args(&mut self) -> Result<Vec<(Arg, usize)>, ParseError> {
        let mut args = Vec::new();
        loop {
            let at = self.offset();
            let lhs = self.expr()?;
            let arg = if let Tok::Cmp(op) = *self.peek() {
                self.bump();
                let rhs = self.expr()?;
                Arg::Cond(Condition { lhs, op, rhs })
            } else {
                Arg::Value(lhs)
            };
            args.push((arg, at));
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.unexpected("`,` or `)`")),
            }
        }
    }
}

fn values(args: Vec<(Arg, usize)>, _call: usize) -> Result<Vec<Expr>, ParseError> {
    args.into_iter()
        .map(|(a, at)| match a {
            Arg::Value(e) => Ok(e),
            Arg::Cond(_) => Err(ParseError::Syntax {
                offset: at,
                message: "comparison is only allowed as a `pw` condition".into(),
            }),
        })
        .collect()
}

fn piecewise(args: Vec<(Arg, usize)>, _call: usize) -> Result<Expr, ParseError> {
    let n = args.len();
    let mut branches = Vec::new();
    let mut pending: Option<Condition> = None;
    let mut otherwise = None;
    for (i, (arg, at)) in args.into_iter().enumerate() {
        let wants_condition = i % 2 == 0 && i + 1 < n;
        match (arg, wants_condition) {
            (Arg::Cond(c), true) => pending = Some(c),
            (Arg::Value(e), false) => match pending.take() {
                Some(c) => branches.push((c, e)),
                None => otherwise = Some(e),
            },
            (Arg::Value(_), true) => {
                return Err(ParseError::Syntax {
                    offset: at,
                    message: "expected a comparison as `pw` condition".into(),
                })
            }
            (Arg::Cond(_), false) => {
                return Err(ParseError::Syntax {
                    offset: at,
                    message: "comparison is only allowed as a `pw` condition".into(),
                })
            }
        }
    }
    Ok(Expr::Piecewise {
        branches,
        otherwise: Box::new(otherwise.expect("odd arity guarantees an else branch")),
    })
}

/// Parse `source` allowing only the variables in `vars`.
pub fn parse(source: &str, vars: &[Var]) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0, vars };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

/// Parse an expression in `x` and `y`.
pub fn parse_xy(source: &str) -> Result<Expr, ParseError> {
    parse(source, &[Var::X, Var::Y])
}

/// Parse a one-variable expression in `x`.
pub fn parse_x(source: &str) -> Result<Expr, ParseError> {
    parse(source, &[Var::X])
}
