//! Text expressions for Grassmann polynomials.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := NUMBER | 'i' | PARAM | GENERATOR | '(' expr ')' | '-' factor
//! PARAM  := hbar | omega | c | d | C          (C = 4c/hbar)
//! GENERATOR := thN | piN                      (N >= 1)
//! ```
//!
//! `*` is the pointwise Grassmann product unless evaluation is asked to use
//! the star product. Generator order inside a product is kept as written.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grassmann::{GeneratorSet, GrassmannElement, GrassmannError, Monomial};
use crate::scalar::{Cx, Scalar};
use crate::star::{StarError, StarProduct};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    Hbar,
    Omega,
    C,
    D,
    /// `4c/ħ`.
    BigC,
}

impl Param {
    fn name(self) -> &'static str {
        match self {
            Self::Hbar => "hbar",
            Self::Omega => "omega",
            Self::C => "c",
            Self::D => "d",
            Self::BigC => "C",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hbar" => Self::Hbar,
            "omega" => Self::Omega,
            "c" => Self::C,
            "d" => Self::D,
            "C" => Self::BigC,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenKind {
    Theta,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOp {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    I,
    Param(Param),
    /// One-based index as written.
    Gen(GenKind, usize),
    Neg(Box<Expr>),
    Product(Vec<Expr>),
    Sum(Box<Expr>, Vec<(AddOp, Expr)>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("malformed number `{0}`")]
    MalformedNumber(String),
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("expected an operand")]
    ExpectedOperand,
    #[error("unexpected `{0}` after complete expression")]
    Trailing(String),
}

/// Parse failure at a one-based column.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("column {column}: {kind}")]
pub struct ParseError {
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    let err = |column: usize, kind| Err(ParseError { column, kind });
    while k < chars.len() {
        let ch = chars[k];
        let col = k + 1;
        match ch {
            ' ' | '\t' | '\n' | '\r' => k += 1,
            '+' => {
                out.push((Tok::Plus, col));
                k += 1;
            }
            '-' => {
                out.push((Tok::Minus, col));
                k += 1;
            }
            '*' => {
                out.push((Tok::Star, col));
                k += 1;
            }
            '(' => {
                out.push((Tok::LParen, col));
                k += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                k += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                    k += 1;
                }
                if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                    let save = k;
                    k += 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    let digits = k;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    if digits == k {
                        k = save + 1;
                        while k < chars.len() && chars[k].is_ascii_alphanumeric() {
                            k += 1;
                        }
                        let s: String = chars[start..k].iter().collect();
                        return err(col, ParseErrorKind::MalformedNumber(s));
                    }
                }
                if k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                    while k < chars.len() && chars[k].is_ascii_alphanumeric() {
                        k += 1;
                    }
                    let s: String = chars[start..k].iter().collect();
                    return err(col, ParseErrorKind::MalformedNumber(s));
                }
                let s: String = chars[start..k].iter().collect();
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push((Tok::Num(v), col)),
                    _ => return err(col, ParseErrorKind::MalformedNumber(s)),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                    k += 1;
                }
                out.push((Tok::Ident(chars[start..k].iter().collect()), col));
            }
            other => return err(col, ParseErrorKind::UnexpectedChar(other)),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn fail<X>(&self, kind: ParseErrorKind) -> Result<X, ParseError> {
        Err(ParseError {
            column: self.column(),
            kind,
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let first = self.term()?;
        let mut rest = Vec::new();
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => AddOp::Plus,
                Some(Tok::Minus) => AddOp::Minus,
                _ => break,
            };
            self.pos += 1;
            rest.push((op, self.term()?));
        }
        Ok(if rest.is_empty() {
            first
        } else {
            Expr::Sum(Box::new(first), rest)
        })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().expect("one factor")
        } else {
            Expr::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let Some((tok, col)) = self.toks.get(self.pos).cloned() else {
            return self.fail(ParseErrorKind::ExpectedOperand);
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.factor()?))),
            Tok::LParen => {
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail(ParseErrorKind::Unbalanced);
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Ident(name) => resolve(&name).ok_or(ParseError {
                column: col,
                kind: ParseErrorKind::UnknownSymbol(name),
            }),
            Tok::RParen => Err(ParseError {
                column: col,
                kind: ParseErrorKind::Unbalanced,
            }),
            Tok::Plus | Tok::Star => Err(ParseError {
                column: col,
                kind: ParseErrorKind::ExpectedOperand,
            }),
        }
    }
}

fn resolve(name: &str) -> Option<Expr> {
    if name == "i" {
        return Some(Expr::I);
    }
    if let Some(p) = Param::parse(name) {
        return Some(Expr::Param(p));
    }
    for (prefix, kind) in [("th", GenKind::Theta), ("pi", GenKind::Pi)] {
        if let Some(digits) = name.strip_prefix(prefix) {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) && !digits.starts_with('0') {
                return digits.parse().ok().map(|k| Expr::Gen(kind, k));
            }
        }
    }
    None
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end_col: text.chars().count() + 1,
    };
    let e = p.expr()?;
    if let Some((tok, col)) = p.toks.get(p.pos) {
        let kind = if *tok == Tok::RParen {
            ParseErrorKind::Unbalanced
        } else {
            ParseErrorKind::Trailing(format!("{tok:?}"))
        };
        return Err(ParseError { column: *col, kind });
    }
    Ok(e)
}

impl Expr {
    /// Largest theta and pi indices used.
    pub fn max_generators(&self) -> (usize, usize) {
        match self {
            Expr::Gen(GenKind::Theta, k) => (*k, 0),
            Expr::Gen(GenKind::Pi, k) => (0, *k),
            Expr::Num(_) | Expr::I | Expr::Param(_) => (0, 0),
            Expr::Neg(e) => e.max_generators(),
            Expr::Product(fs) => fs.iter().fold((0, 0), |acc, f| {
                let (t, p) = f.max_generators();
                (acc.0.max(t), acc.1.max(p))
            }),
            Expr::Sum(first, rest) => rest.iter().fold(first.max_generators(), |acc, (_, f)| {
                let (t, p) = f.max_generators();
                (acc.0.max(t), acc.1.max(p))
            }),
        }
    }

    fn fmt_factor(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Sum(..) | Expr::Product(_) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::I => write!(f, "i"),
            Expr::Param(p) => write!(f, "{}", p.name()),
            Expr::Gen(GenKind::Theta, k) => write!(f, "th{k}"),
            Expr::Gen(GenKind::Pi, k) => write!(f, "pi{k}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_factor(f)
            }
            Expr::Product(fs) => {
                for (k, x) in fs.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    x.fmt_factor(f)?;
                }
                Ok(())
            }
            Expr::Sum(first, rest) => {
                match **first {
                    Expr::Sum(..) => write!(f, "({first})")?,
                    _ => write!(f, "{first}")?,
                }
                for (op, x) in rest {
                    write!(f, " {} ", if *op == AddOp::Plus { '+' } else { '-' })?;
                    match x {
                        Expr::Sum(..) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("generator {0} is outside the evaluation algebra")]
    UnknownGenerator(String),
    #[error("parameter C needs a nonzero hbar")]
    ZeroHbar,
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Star(#[from] StarError),
}

/// Numeric values of the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params<T> {
    pub hbar: T,
    pub omega: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Params<T> {
    fn value(&self, p: Param) -> Result<T, EvalError> {
        Ok(match p {
            Param::Hbar => self.hbar,
            Param::Omega => self.omega,
            Param::C => self.c,
            Param::D => self.d,
            Param::BigC => {
                if self.hbar == T::zero() {
                    return Err(EvalError::ZeroHbar);
                }
                T::lit(4.0) * self.c / self.hbar
            }
        })
    }
}

/// Evaluates `e` on `algebra`, whose generators are looked up by their
/// names (`th1`, `pi2`, …). Products use `star` when given.
pub fn evaluate<T: Scalar>(
    e: &Expr,
    algebra: &Arc<GeneratorSet>,
    params: &Params<T>,
    star: Option<&StarProduct<T>>,
) -> Result<GrassmannElement<T>, EvalError> {
    Ok(match e {
        Expr::Num(v) => GrassmannElement::real_scalar(algebra, T::lit(*v)),
        Expr::I => GrassmannElement::scalar(algebra, Cx::new(T::zero(), T::one())),
        Expr::Param(p) => GrassmannElement::real_scalar(algebra, params.value(*p)?),
        Expr::Gen(..) => {
            let name = e.to_string();
            let i = algebra.index_of(&name).map_err(|_| EvalError::UnknownGenerator(name))?;
            GrassmannElement::generator(algebra, i)
        }
        Expr::Neg(x) => -&evaluate(x, algebra, params, star)?,
        Expr::Product(fs) => {
            let mut acc = evaluate(&fs[0], algebra, params, star)?;
            for x in &fs[1..] {
                let v = evaluate(x, algebra, params, star)?;
                acc = match star {
                    Some(s) => s.star(&acc, &v)?,
                    None => acc.checked_mul(&v)?,
                };
            }
            acc
        }
        Expr::Sum(first, rest) => {
            let mut acc = evaluate(first, algebra, params, star)?;
            for (op, x) in rest {
                let v = evaluate(x, algebra, params, star)?;
                acc = match op {
                    AddOp::Plus => acc.checked_add(&v)?,
                    AddOp::Minus => acc.checked_sub(&v)?,
                };
            }
            acc
        }
    })
}

fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// Writes an element in the expression grammar, e.g.
/// `(0.5 - 0.25*i)*th1*th3 + 1.0`.
pub fn format_element<T: Scalar>(e: &GrassmannElement<T>) -> String {
    if e.is_zero() {
        return "0.0".into();
    }
    let mut out = String::new();
    let alg = e.algebra();
    for (k, (m, c)) in e.terms().enumerate() {
        let (re, im) = (c.re.to_f64_lossy(), c.im.to_f64_lossy());
        let coeff = if im == 0.0 {
            if re < 0.0 {
                format!("-{}", fmt_real(-re))
            } else {
                fmt_real(re)
            }
        } else if re == 0.0 {
            if im < 0.0 {
                format!("-{}*i", fmt_real(-im))
            } else {
                format!("{}*i", fmt_real(im))
            }
        } else {
            let sign = if im < 0.0 { '-' } else { '+' };
            format!("({} {} {}*i)", fmt_real(re), sign, fmt_real(im.abs()))
        };
        let (sep, coeff) = match coeff.strip_prefix('-') {
            Some(rest) if k > 0 => (" - ", rest.to_string()),
            _ if k > 0 => (" + ", coeff),
            _ => ("", coeff),
        };
        out.push_str(sep);
        if m == Monomial::ONE {
            out.push_str(&coeff);
        } else if coeff == "1.0" {
            out.push_str(&names(m, alg));
        } else {
            out.push_str(&coeff);
            out.push('*');
            out.push_str(&names(m, alg));
        }
    }
    out
}

fn names(m: Monomial, alg: &GeneratorSet) -> String {
    m.indices().map(|i| alg.name(i)).collect::<Vec<_>>().join("*")
}
