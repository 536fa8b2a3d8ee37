//! Text syntax for polynomial expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?            right associative
//! atom   := INT | IMAG | 'i' | SYMBOL | '(' expr ')'
//! ```
//!
//! `i` is the imaginary unit and `2i` an imaginary integer literal; after a
//! `/`, `p/qi` reads as `(p/q)·i`, so `3/4+1/2i` is `3/4 + i/2`. A `*`
//! directly after a symbol is a conjugation marker (`b*`) unless the next
//! non-blank character starts an operand, in which case it is the product
//! operator: `b* * b` is `b*·b` while `b*b` is `b·b`.
//!
//! Division is only allowed by nonzero constants and by products of the
//! parameters `beta`, `hbar`, `q`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly::{is_parameter, PolyExpr};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprAst {
    Int(BigInt),
    /// `n·i`
    Imag(BigInt),
    Symbol(String),
    Neg(Box<ExprAst>),
    Add(Box<ExprAst>, Box<ExprAst>),
    Sub(Box<ExprAst>, Box<ExprAst>),
    Mul(Box<ExprAst>, Box<ExprAst>),
    Div(Box<ExprAst>, Box<ExprAst>),
    Pow(Box<ExprAst>, Box<ExprAst>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Imag(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn starts_operand(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '('
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            advance(&mut i, &mut line, &mut col, c);
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            let digits: String = chars[start..i].iter().collect();
            let n: BigInt = digits.parse().expect("digits");
            let imag = i < chars.len()
                && chars[i] == 'i'
                && !chars
                    .get(i + 1)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_');
            if imag {
                advance(&mut i, &mut line, &mut col, 'i');
                out.push(Token { tok: Tok::Imag(n), line: tl, column: tc });
            } else if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err(syntax(line, col, "identifier cannot follow a number directly"));
            } else {
                out.push(Token { tok: Tok::Int(n), line: tl, column: tc });
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            let mut name: String = chars[start..i].iter().collect();
            if i < chars.len() && chars[i] == '*' {
                let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if !next.is_some_and(|&n| starts_operand(n)) {
                    advance(&mut i, &mut line, &mut col, '*');
                    name.push('*');
                }
            }
            out.push(Token { tok: Tok::Ident(name), line: tl, column: tc });
            continue;
        }
        return Err(syntax(tl, tc, format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<ExprAst> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    lhs = ExprAst::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = ExprAst::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ExprAst> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    lhs = ExprAst::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    if let Tok::Imag(n) = self.peek().tok.clone() {
                        self.bump();
                        let q = ExprAst::Div(Box::new(lhs), Box::new(ExprAst::Int(n)));
                        lhs = ExprAst::Mul(Box::new(q), Box::new(ExprAst::Symbol("i".into())));
                    } else {
                        lhs = ExprAst::Div(Box::new(lhs), Box::new(self.unary()?));
                    }
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ExprAst> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(ExprAst::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(ExprAst::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprAst> {
        let t = self.bump();
        match t.tok {
            Tok::Int(n) => Ok(ExprAst::Int(n)),
            Tok::Imag(n) => Ok(ExprAst::Imag(n)),
            Tok::Ident(s) => Ok(ExprAst::Symbol(s)),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(syntax(close.line, close.column, "expected `)`"));
                }
                Ok(inner)
            }
            Tok::End => Err(syntax(t.line, t.column, "unexpected end of input")),
            other => Err(syntax(t.line, t.column, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses text into an AST.
pub fn parse_expr(text: &str) -> Result<ExprAst> {
    if text.trim().is_empty() {
        return Err(syntax(1, 1, "empty expression"));
    }
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let ast = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return Err(syntax(t.line, t.column, format!("unexpected trailing token {:?}", t.tok)));
    }
    Ok(ast)
}

/// Parses and lowers to a polynomial.
pub fn parse_poly(text: &str) -> Result<PolyExpr> {
    parse_expr(text)?.lower()
}

impl ExprAst {
    pub fn lower(&self) -> Result<PolyExpr> {
        match self {
            ExprAst::Int(n) => Ok(PolyExpr::constant(Scalar::real(Rational::from_integer(n.clone())))),
            ExprAst::Imag(n) => Ok(PolyExpr::constant(Scalar::new(
                Rational::zero(),
                Rational::from_integer(n.clone()),
            ))),
            ExprAst::Symbol(s) if s == "i" => Ok(PolyExpr::constant(Scalar::i())),
            ExprAst::Symbol(s) => Ok(PolyExpr::var(s)),
            ExprAst::Neg(a) => Ok(-&a.lower()?),
            ExprAst::Add(a, b) => Ok(&a.lower()? + &b.lower()?),
            ExprAst::Sub(a, b) => Ok(&a.lower()? - &b.lower()?),
            ExprAst::Mul(a, b) => Ok(&a.lower()? * &b.lower()?),
            ExprAst::Div(a, b) => {
                let num = a.lower()?;
                let den = b.lower()?;
                Ok(&num * &invert_monomial(&den)?)
            }
            ExprAst::Pow(a, b) => {
                let base = a.lower()?;
                let exp = b
                    .lower()?
                    .as_constant()
                    .filter(|c| c.is_real() && c.re.is_integer())
                    .and_then(|c| c.re.to_integer().to_i32())
                    .ok_or_else(|| Error::Format("exponent must be an integer constant".into()))?;
                if exp >= 0 {
                    Ok(base.pow(exp as u32))
                } else {
                    Ok(invert_monomial(&base)?.pow(exp.unsigned_abs()))
                }
            }
        }
    }
}

/// Inverse of a single term whose symbols are all parameters.
fn invert_monomial(p: &PolyExpr) -> Result<PolyExpr> {
    let non_poly = || Error::Format(format!("division by `{p}` is not polynomial"));
    if p.num_terms() != 1 {
        return Err(non_poly());
    }
    let (m, c) = p.terms().next().expect("one term");
    if m.keys().any(|s| !is_parameter(s)) {
        return Err(non_poly());
    }
    let inv_c = c.recip().map_err(|_| Error::Format("division by zero".into()))?;
    let inv_m = m.iter().map(|(s, e)| (s.clone(), -e)).collect();
    Ok(PolyExpr::from_terms([(inv_m, inv_c)]))
}

fn prec(e: &ExprAst) -> u8 {
    match e {
        ExprAst::Add(..) | ExprAst::Sub(..) => 1,
        ExprAst::Mul(..) | ExprAst::Div(..) => 2,
        ExprAst::Neg(..) => 3,
        ExprAst::Pow(..) => 4,
        _ => 5,
    }
}

impl fmt::Display for ExprAst {
    /// Minimal-parenthesis rendering that re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &ExprAst, min: u8| {
            if prec(e) < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            ExprAst::Int(n) => write!(f, "{n}"),
            ExprAst::Imag(n) if n.is_one() => write!(f, "1i"),
            ExprAst::Imag(n) => write!(f, "{n}i"),
            ExprAst::Symbol(s) => write!(f, "{s}"),
            ExprAst::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 3)
            }
            ExprAst::Add(a, b) | ExprAst::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " {} ", if matches!(self, ExprAst::Add(..)) { "+" } else { "-" })?;
                wrap(f, b, 2)
            }
            ExprAst::Mul(a, b) | ExprAst::Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, " {} ", if matches!(self, ExprAst::Mul(..)) { "*" } else { "/" })?;
                // An imaginary literal after `/` has a special reading.
                if matches!(self, ExprAst::Div(..)) && matches!(**b, ExprAst::Imag(_)) {
                    write!(f, "({b})")
                } else {
                    wrap(f, b, 3)
                }
            }
            ExprAst::Pow(a, b) => {
                wrap(f, a, 5)?;
                write!(f, "^")?;
                wrap(f, b, 3)
            }
        }
    }
}
