//! Recursive-descent parser for
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' factor)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//! ```

use std::collections::BTreeMap;

use super::ast::{BinOp, Constant, Expr, Func};
use super::FunctionDef;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) {
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
            let v: f64 = text[start..i]
                .parse()
                .map_err(|_| Error::Syntax { offset: start, message: "malformed number".into() })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 {
            // identifiers may contain non-ASCII letters such as Greek names
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] >= 0x80) {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                return Err(Error::Syntax { offset: start, message: format!("unexpected character `{}`", c as char) })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// Name resolution for parsing.
///
/// With `vars == None` every identifier is accepted as a variable.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    pub vars: Option<Vec<String>>,
    /// Named constants replaced by their values at parse time.
    pub params: BTreeMap<String, f64>,
    /// Single-argument user functions, inlined at call sites.
    pub functions: BTreeMap<String, FunctionDef>,
}

impl Scope {
    pub fn permissive() -> Self {
        Scope::default()
    }

    pub fn with_vars(vars: &[&str]) -> Self {
        Scope { vars: Some(vars.iter().map(|s| s.to_string()).collect()), ..Default::default() }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn function(mut self, def: FunctionDef) -> Self {
        self.functions.insert(def.name.clone(), def);
        self
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
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

    fn fail<T>(&self, message: &str) -> Result<T> {
        Err(Error::Syntax { offset: self.offset(), message: message.to_string() })
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            self.fail("expected `)`")
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.factor()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('-') => Ok(Expr::Neg(Box::new(self.base()?))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return self.resolve_call(&name, arg);
                }
                self.resolve_ident(&name)
            }
            Tok::End => Err(Error::Syntax { offset: at, message: "unexpected end of input".into() }),
            _ => Err(Error::Syntax { offset: at, message: "expected a number, name, `(` or `-`".into() }),
        }
    }

    fn resolve_call(&self, name: &str, arg: Expr) -> Result<Expr> {
        if let Some(f) = Func::from_name(name) {
            return Ok(Expr::call(f, arg));
        }
        match self.scope.functions.get(name) {
            Some(def) => def.inline(&[arg]),
            None => Err(Error::UnknownFunction(name.to_string())),
        }
    }

    fn resolve_ident(&self, name: &str) -> Result<Expr> {
        if let Some(vars) = &self.scope.vars {
            if vars.iter().any(|v| v == name) {
                return Ok(Expr::Var(name.to_string()));
            }
        }
        if let Some(v) = self.scope.params.get(name) {
            return Ok(Expr::Num(*v));
        }
        if let Some(c) = Constant::from_name(name) {
            return Ok(Expr::Const(c));
        }
        if self.scope.vars.is_none() {
            return Ok(Expr::Var(name.to_string()));
        }
        Err(Error::UnknownVariable(name.to_string()))
    }
}

/// Parses with every identifier accepted as a variable.
pub fn parse(text: &str) -> Result<Expr> {
    parse_in(text, &Scope::permissive())
}

/// Parses and resolves names against `scope`.
pub fn parse_in(text: &str, scope: &Scope) -> Result<Expr> {
    let toks = lex(text)?;
    if toks.len() == 1 {
        return Err(Error::Syntax { offset: 0, message: "empty expression".into() });
    }
    let mut p = Parser { toks, pos: 0, scope };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}
