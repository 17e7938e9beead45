//! Recursive-descent parser for infix expressions.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | name | func '(' expr ')' | '(' expr ')'
//! ```

use num_rational::Rational64;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at offset {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function `{name}` takes 1 argument, got {got} (offset {offset})")]
    Arity { name: String, got: usize, offset: usize },
    #[error("exponent at offset {offset} is not a rational constant")]
    Exponent { offset: usize },
}

impl ExprError {
    pub fn offset(&self) -> usize {
        match self {
            ExprError::Syntax { offset, .. }
            | ExprError::UnknownVariable { offset, .. }
            | ExprError::UnknownFunction { offset, .. }
            | ExprError::Arity { offset, .. }
            | ExprError::Exponent { offset } => *offset,
        }
    }

    /// Same error with its offset moved by `base` bytes.
    pub fn shifted(self, base: usize) -> ExprError {
        match self {
            ExprError::Syntax { offset, message } => ExprError::Syntax { offset: offset + base, message },
            ExprError::UnknownVariable { name, offset } => {
                ExprError::UnknownVariable { name, offset: offset + base }
            }
            ExprError::UnknownFunction { name, offset } => {
                ExprError::UnknownFunction { name, offset: offset + base }
            }
            ExprError::Arity { name, got, offset } => ExprError::Arity { name, got, offset: offset + base },
            ExprError::Exponent { offset } => ExprError::Exponent { offset: offset + base },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let v = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("bad number `{text}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^(),".contains(&c) {
            out.push((Tok::Sym(c as char), i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap();
            return Err(ExprError::Syntax { offset: i, message: format!("unexpected character `{ch}`") });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [String],
}

fn negate(e: Expr) -> Expr {
    match e.node() {
        Node::Const(c) => Expr::constant(-c),
        _ => Expr::product_raw(vec![Expr::constant(-1.0), e]),
    }
}

pub(crate) fn to_rational(x: f64) -> Option<Rational64> {
    if !x.is_finite() {
        return None;
    }
    for den in 1..=1000i64 {
        let num = (x * den as f64).round();
        if num.abs() < 1e15 && (num / den as f64 - x).abs() <= 1e-12 * x.abs().max(1.0) {
            return Some(Rational64::new(num as i64, den));
        }
    }
    None
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, what: &str) -> ExprError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
        };
        ExprError::Syntax { offset: self.offset(), message: format!("expected {what}, found {found}") }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                let t = self.term()?;
                terms.push(negate(t));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::sum_raw(terms) })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut fs = vec![self.unary()?];
        loop {
            if self.eat('*') {
                fs.push(self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                fs.push(Expr::pow_raw(d, Rational64::from_integer(-1)));
            } else {
                break;
            }
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { Expr::product_raw(fs) })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            let inner = self.unary()?;
            return Ok(negate(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let at = self.offset();
            let ex = self.unary()?;
            let value = ex.eval(&[][..]).map_err(|_| ExprError::Exponent { offset: at })?;
            let r = to_rational(value).ok_or(ExprError::Exponent { offset: at })?;
            return Ok(Expr::pow_raw(base, r));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::constant(v))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.eat('(') {
                    let mut args = Vec::new();
                    if !self.eat(')') {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(',') {
                                continue;
                            }
                            if self.eat(')') {
                                break;
                            }
                            return Err(self.unexpected("`,` or `)`"));
                        }
                    }
                    let func = Func::from_name(&name)
                        .ok_or(ExprError::UnknownFunction { name: name.clone(), offset: at })?;
                    if args.len() != 1 {
                        return Err(ExprError::Arity { name, got: args.len(), offset: at });
                    }
                    Ok(Expr::call_raw(func, args.pop().unwrap()))
                } else if self.vars.contains(&name) {
                    Ok(Expr::var(&name))
                } else if name == "pi" {
                    Ok(Expr::constant(std::f64::consts::PI))
                } else {
                    Err(ExprError::UnknownVariable { name, offset: at })
                }
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected("`)`"));
                }
                Ok(e)
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

/// Parses `text`, accepting only identifiers listed in `allowed_vars` (plus the constant `pi`).
pub fn parse_expr(text: &str, allowed_vars: &[String]) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, vars: allowed_vars };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("operator or end of input"));
    }
    Ok(e)
}
