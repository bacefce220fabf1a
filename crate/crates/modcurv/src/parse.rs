//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! program := (def)* ;
//! def     := "def" NAME "(" params ")" "=" expr ";"
//! expr    := term (("+"|"-") term)* ;
//! term    := factor (("*"|"/") factor)* ;
//! factor  := base ("^" INTEGER)? ;
//! base    := NUMBER | "pi" | NAME | NAME "(" args ")" | "(" expr ")"
//!          | "-" base | "exp" "(" expr ")" | "log" "(" expr ")"
//! NUMBER  := INTEGER | INTEGER "/" INTEGER   (exact rational literal)
//! ```
//!
//! `#` starts a comment running to end of line. Precedence: unary minus >
//! `^` > `*`,`/` > `+`,`-`; `^` is right-associative with an integer
//! exponent (so `-x^2` parses as `(-x)^2`). A rational literal is only
//! lexed when `/` immediately follows the integer and a digit immediately
//! follows the `/`; everywhere else `/` is division.

use crate::expr::Expr;
use rug::{Integer, Rational};
use std::fmt;

#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Num(Rational),
    Punct(char),
    /// `==` in relation files.
    EqEq,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    let (mut line, mut col) = (1usize, 1usize);
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let (tline, tcol) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let num: Integer = src[start..i].parse().unwrap();
            let mut q = Rational::from(num);
            // Rational literal: '/' immediately followed by a digit.
            if i + 1 < bytes.len() && bytes[i] == b'/' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                let dstart = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let den: Integer = src[dstart..i].parse().unwrap();
                if den == 0 {
                    return Err(ParseError {
                        line: tline,
                        col: tcol,
                        msg: "zero denominator in rational literal".into(),
                    });
                }
                q /= den;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Num(q),
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Name(src[start..i].to_string()),
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c == '=' && i + 1 < bytes.len() && bytes[i + 1] == b'=' {
            i += 2;
            col += 2;
            out.push(Token {
                tok: Tok::EqEq,
                line: tline,
                col: tcol,
            });
            continue;
        }
        if "()+-*/^,;=:".contains(c) {
            i += 1;
            col += 1;
            out.push(Token {
                tok: Tok::Punct(c),
                line: tline,
                col: tcol,
            });
            continue;
        }
        return Err(ParseError {
            line,
            col,
            msg: format!("unexpected character {:?}", c),
        });
    }
    Ok(out)
}

/// Token-stream parser. Variable names are resolved to indices through the
/// caller-supplied binding (definition parameter lists, or `s1..sn` in
/// relation files).
pub struct Parser<'a> {
    toks: &'a [Token],
    pub pos: usize,
}

impl<'a> Parser<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        Parser { toks, pos: 0 }
    }

    pub fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    pub fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    pub fn eat_punct(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {:?}", c))),
        }
    }

    pub fn try_punct(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(p)) if *p == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Name(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err("expected a name")),
        }
    }

    pub fn expr(&mut self, vars: &dyn Fn(&str) -> Option<u32>) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term(vars)?];
        loop {
            if self.try_punct('+') {
                terms.push(self.term(vars)?);
            } else if self.try_punct('-') {
                terms.push(Expr::neg(self.term(vars)?));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self, vars: &dyn Fn(&str) -> Option<u32>) -> Result<Expr, ParseError> {
        let mut acc = self.factor(vars)?;
        loop {
            if self.try_punct('*') {
                let rhs = self.factor(vars)?;
                acc = match acc {
                    Expr::Prod(mut v) => {
                        v.push(rhs);
                        Expr::Prod(v)
                    }
                    other => Expr::Prod(vec![other, rhs]),
                };
            } else if self.try_punct('/') {
                let rhs = self.factor(vars)?;
                acc = Expr::quot(acc, rhs);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self, vars: &dyn Fn(&str) -> Option<u32>) -> Result<Expr, ParseError> {
        let base = self.base(vars)?;
        if self.try_punct('^') {
            let negate = self.try_punct('-');
            match self.peek() {
                Some(Tok::Num(q)) if q.is_integer() => {
                    let k: i32 = q
                        .numer()
                        .to_i32()
                        .ok_or_else(|| self.err("exponent out of range"))?;
                    self.pos += 1;
                    Ok(Expr::pow(base, if negate { -k } else { k }))
                }
                _ => Err(self.err("expected integer exponent after '^'")),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self, vars: &dyn Fn(&str) -> Option<u32>) -> Result<Expr, ParseError> {
        if self.try_punct('-') {
            return Ok(Expr::neg(self.base(vars)?));
        }
        if self.try_punct('(') {
            let e = self.expr(vars)?;
            self.eat_punct(')')?;
            return Ok(e);
        }
        match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                Ok(Expr::Rat(q))
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                if name == "exp" || name == "log" {
                    self.eat_punct('(')?;
                    let e = self.expr(vars)?;
                    self.eat_punct(')')?;
                    return Ok(if name == "exp" {
                        Expr::exp(e)
                    } else {
                        Expr::log(e)
                    });
                }
                if self.try_punct('(') {
                    let mut args = Vec::new();
                    if !self.try_punct(')') {
                        loop {
                            args.push(self.expr(vars)?);
                            if self.try_punct(')') {
                                break;
                            }
                            self.eat_punct(',')?;
                        }
                    }
                    return Ok(Expr::Call(name.as_str().into(), args));
                }
                match vars(&name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(self.err(format!("unknown variable {:?}", name))),
                }
            }
            _ => Err(self.err("expected a number, name, or parenthesized expression")),
        }
    }
}

/// A single parsed function definition.
#[derive(Debug, Clone)]
pub struct ParsedDef {
    pub name: String,
    pub arity: usize,
    pub body: Expr,
}

/// Parse a corpus file: a sequence of `def` statements.
pub fn parse_defs(src: &str) -> Result<Vec<ParsedDef>, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(&toks);
    let mut out = Vec::new();
    while !p.done() {
        let kw = p.eat_name()?;
        if kw != "def" {
            return Err(p.err(format!("expected \"def\", found {:?}", kw)));
        }
        let name = p.eat_name()?;
        p.eat_punct('(')?;
        let mut params: Vec<String> = Vec::new();
        if !p.try_punct(')') {
            loop {
                params.push(p.eat_name()?);
                if p.try_punct(')') {
                    break;
                }
                p.eat_punct(',')?;
            }
        }
        p.eat_punct('=')?;
        let params2 = params.clone();
        let body = p.expr(&move |n: &str| {
            params2
                .iter()
                .position(|q| q == n)
                .map(|i| (i + 1) as u32)
        })?;
        p.eat_punct(';')?;
        out.push(ParsedDef {
            name,
            arity: params.len(),
            body,
        });
    }
    Ok(out)
}

/// Variable binding `s1..sn` used by relation files and the CLI.
pub fn s_vars(name: &str) -> Option<u32> {
    let rest = name.strip_prefix('s')?;
    let i: u32 = rest.parse().ok()?;
    if i >= 1 {
        Some(i)
    } else {
        None
    }
}

/// Parse a standalone expression over `s1..sn`.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(&toks);
    let e = p.expr(&s_vars)?;
    if !p.done() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(e)
}
