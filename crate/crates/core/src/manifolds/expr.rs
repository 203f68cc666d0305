//! A tiny arithmetic expression language over chart coordinates.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | atom
//! atom    := number | ident | func "(" sum ")" | "(" sum ")"
//! func    := "sin" | "cos" | "exp"
//! ```
//!
//! [`Expr::to_source`] prints with the minimal parentheses needed for the
//! printed text to parse back to the same tree.

use std::fmt;

use crate::error::{Result, WittError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Neg,
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

/// Expression tree over the coordinates of a single chart.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate by position in the chart's coordinate list.
    Coord(usize),
    Unary(UnaryFn, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn coord(i: usize) -> Self {
        Expr::Coord(i)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Coord(i) => Some(*i),
            Expr::Unary(_, e) => e.max_coord(),
            Expr::Binary(_, l, r) => match (l.max_coord(), r.max_coord()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }

    /// Plain value at `x`, with the same division guard as the jet evaluator.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Coord(i) => *x.get(*i).ok_or(WittError::Dimension {
                expected: i + 1,
                found: x.len(),
            })?,
            Expr::Unary(f, e) => {
                let v = e.eval(x)?;
                match f {
                    UnaryFn::Neg => -v,
                    UnaryFn::Sin => v.sin(),
                    UnaryFn::Cos => v.cos(),
                    UnaryFn::Exp => v.exp(),
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval(x)?;
                let b = r.eval(x)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        guard_divisor(b)?;
                        a / b
                    }
                }
            }
        })
    }

    /// Renders the expression using `names` for coordinates.
    pub fn to_source(&self, names: &[String]) -> String {
        let mut out = String::new();
        self.write(&mut out, names, 0, false);
        out
    }

    // `min_prec` is the binding strength required by the parent; `right` marks
    // the right operand of a non-associative operator.
    fn write(&self, out: &mut String, names: &[String], min_prec: u8, right: bool) {
        match self {
            Expr::Const(v) => {
                // Negative literals are printed as unary minus applied to a positive literal.
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    Expr::Unary(UnaryFn::Neg, Box::new(Expr::Const(-v))).write(
                        out, names, min_prec, right,
                    );
                } else {
                    out.push_str(&format_number(*v));
                }
            }
            Expr::Coord(i) => match names.get(*i) {
                Some(n) => out.push_str(n),
                None => out.push_str(&format!("x{}", i + 1)),
            },
            Expr::Unary(UnaryFn::Neg, e) => {
                let paren = min_prec > 2;
                if paren {
                    out.push('(');
                }
                out.push('-');
                e.write(out, names, 3, false);
                if paren {
                    out.push(')');
                }
            }
            Expr::Unary(f, e) => {
                out.push_str(match f {
                    UnaryFn::Sin => "sin",
                    UnaryFn::Cos => "cos",
                    UnaryFn::Exp => "exp",
                    UnaryFn::Neg => unreachable!(),
                });
                out.push('(');
                e.write(out, names, 0, false);
                out.push(')');
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let paren = p < min_prec || (right && p == min_prec);
                if paren {
                    out.push('(');
                }
                l.write(out, names, p, false);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                r.write(out, names, p, true);
                if paren {
                    out.push(')');
                }
            }
        }
    }
}

pub(crate) fn guard_divisor(b: f64) -> Result<()> {
    if b.abs() < 1e-14 {
        return Err(WittError::DomainGuard(format!("division by {b:e}")));
    }
    Ok(())
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        // `{:?}` prints the shortest representation that round-trips.
        format!("{v:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_source(&[]))
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Add, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Sub, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Mul, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Binary(BinaryOp::Div, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Unary(UnaryFn::Neg, Box::new(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| WittError::Parse(format!("bad number '{text}'")))?;
            tokens.push(Token::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/".contains(c) {
            tokens.push(Token::Op(c));
            i += 1;
        } else if c == '(' {
            tokens.push(Token::LParen);
            i += 1;
        } else if c == ')' {
            tokens.push(Token::RParen);
            i += 1;
        } else {
            return Err(WittError::Parse(format!("unexpected character '{c}' in '{src}'")));
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a [String],
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err(&self, msg: &str) -> WittError {
        WittError::Parse(format!("{msg} in '{}'", self.src))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            let op = if c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(Expr::Unary(UnaryFn::Neg, Box::new(e)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Const(v)),
            Some(Token::Ident(name)) => {
                let func = match name.as_str() {
                    "sin" => Some(UnaryFn::Sin),
                    "cos" => Some(UnaryFn::Cos),
                    "exp" => Some(UnaryFn::Exp),
                    _ => None,
                };
                if let Some(f) = func {
                    if self.next() != Some(Token::LParen) {
                        return Err(self.err(&format!("expected '(' after {name}")));
                    }
                    let arg = self.sum()?;
                    if self.next() != Some(Token::RParen) {
                        return Err(self.err("expected ')'"));
                    }
                    return Ok(Expr::Unary(f, Box::new(arg)));
                }
                match self.names.iter().position(|n| *n == name) {
                    Some(i) => Ok(Expr::Coord(i)),
                    None => Err(self.err(&format!("unknown coordinate '{name}'"))),
                }
            }
            Some(Token::LParen) => {
                let e = self.sum()?;
                if self.next() != Some(Token::RParen) {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(t) => Err(self.err(&format!("unexpected token {t:?}"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

/// Parses `src` over the declared coordinate `names`.
pub fn parse_expr(src: &str, names: &[String]) -> Result<Expr> {
    let mut p = Parser {
        tokens: tokenize(src)?,
        pos: 0,
        names,
        src,
    };
    let e = p.sum()?;
    if p.pos != p.tokens.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}
