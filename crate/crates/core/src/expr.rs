//! Profile expressions in one variable `t`, evaluated together with their
//! first and second derivatives.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'pi' | func '(' expr ')' | 'pow' '(' expr ',' expr ')' | '(' expr ')'
//! func  := exp | log | sin | cos | sinh | cosh
//! ```

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use crate::model_space::s_kappa_lambda;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message} at column {column}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

/// Value with first and second derivative in `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: f64,
    pub dd: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Jet { v, d: 0.0, dd: 0.0 }
    }

    pub const fn variable(t: f64) -> Self {
        Jet {
            v: t,
            d: 1.0,
            dd: 0.0,
        }
    }

    /// Composition `g(self)` given `g`, `g'` and `g''` at `self.v`.
    fn chain(self, g: f64, g1: f64, g2: f64) -> Self {
        Jet {
            v: g,
            d: g1 * self.d,
            dd: g2 * self.d * self.d + g1 * self.dd,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let x = self.v;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    pub fn powf(self, k: f64) -> Self {
        let x = self.v;
        if k == 0.0 {
            return Jet::constant(1.0);
        }
        // Integer exponents keep negative bases and exact zeros well defined.
        if k.fract() == 0.0 && k.abs() < 1024.0 {
            let ki = k as i32;
            let g1 = if ki == 1 { 1.0 } else { k * x.powi(ki - 1) };
            let g2 = match ki {
                1 => 0.0,
                2 => 2.0,
                _ => k * (k - 1.0) * x.powi(ki - 2),
            };
            return self.chain(x.powi(ki), g1, g2);
        }
        self.chain(
            x.powf(k),
            k * x.powf(k - 1.0),
            k * (k - 1.0) * x.powf(k - 2.0),
        )
    }

    pub fn pow(self, e: Jet) -> Self {
        if e.d == 0.0 && e.dd == 0.0 {
            self.powf(e.v)
        } else {
            (e * self.ln()).exp()
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d: self.d + o.d,
            dd: self.dd + o.dd,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            v: self.v - o.v,
            d: self.d - o.d,
            dd: self.dd - o.dd,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
            dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let q = self.v / o.v;
        let d = (self.d - q * o.d) / o.v;
        let dd = (self.dd - 2.0 * d * o.d - q * o.dd) / o.v;
        Jet { v: q, d, dd }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            v: -self.v,
            d: -self.d,
            dd: -self.dd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// `s_{κ,λ}(t)`; built programmatically, not part of the text grammar.
    Model {
        kappa: f64,
        lambda: f64,
    },
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let tokens = lex(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            len: src.chars().count(),
        };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some((col, tok)) => Err(ExprError {
                column: col,
                message: format!("unexpected {tok}"),
            }),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.jet(t).v
    }

    pub fn jet(&self, t: f64) -> Jet {
        match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::T => Jet::variable(t),
            Expr::Neg(a) => -a.jet(t),
            Expr::Add(a, b) => a.jet(t) + b.jet(t),
            Expr::Sub(a, b) => a.jet(t) - b.jet(t),
            Expr::Mul(a, b) => a.jet(t) * b.jet(t),
            Expr::Div(a, b) => a.jet(t) / b.jet(t),
            Expr::Pow(a, b) => a.jet(t).pow(b.jet(t)),
            Expr::Call(f, a) => {
                let x = a.jet(t);
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                }
            }
            Expr::Model { kappa, lambda } => {
                let m = s_kappa_lambda(*kappa, *lambda, t);
                Jet {
                    v: m.value,
                    d: m.derivative,
                    dd: -kappa * m.value,
                }
            }
        }
    }

    /// True when the expression does not depend on `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::T | Expr::Model { .. } => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::T => f.write_str("t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "pow({a}, {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Model { kappa, lambda } => write!(f, "s[{kappa:?},{lambda:?}](t)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "identifier '{s}'"),
            Token::Op(c) => write!(f, "'{c}'"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| ExprError {
                column: col,
                message: format!("malformed number '{text}'"),
            })?;
            out.push((col, Token::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((col, Token::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^(),".contains(c) {
            out.push((col, Token::Op(c)));
            i += 1;
        } else {
            return Err(ExprError {
                column: col,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<(usize, &Token)> {
        self.tokens.get(self.pos).map(|(c, t)| (*c, t))
    }

    fn end_column(&self) -> usize {
        self.len + 1
    }

    fn eat_op(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some((_, Token::Op(c))) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ExprError> {
        if self.eat_op(op) {
            return Ok(());
        }
        let (column, found) = match self.peek() {
            Some((c, t)) => (c, t.to_string()),
            None => (self.end_column(), "end of input".to_string()),
        };
        Err(ExprError {
            column,
            message: format!("expected '{op}', found {found}"),
        })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat_op('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some((col, tok)) = self.peek() else {
            return Err(ExprError {
                column: self.end_column(),
                message: "unexpected end of input".into(),
            });
        };
        let tok = tok.clone();
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "t" => Ok(Expr::T),
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "pow" => {
                    self.expect_op('(')?;
                    let base = self.expr()?;
                    self.expect_op(',')?;
                    let exponent = self.expr()?;
                    self.expect_op(')')?;
                    Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
                }
                other => match Func::from_name(other) {
                    Some(f) => {
                        self.expect_op('(')?;
                        let arg = self.expr()?;
                        self.expect_op(')')?;
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    None => Err(ExprError {
                        column: col,
                        message: format!("unknown identifier '{other}'"),
                    }),
                },
            },
            other => Err(ExprError {
                column: col,
                message: format!("unexpected {other}"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(e: &Expr, t: f64) -> (f64, f64) {
        let h = 1e-4;
        let d = (e.eval(t + h) - e.eval(t - h)) / (2.0 * h);
        let dd = (e.eval(t + h) - 2.0 * e.eval(t) + e.eval(t - h)) / (h * h);
        (d, dd)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(Expr::parse("1 + 2 * 3").unwrap().eval(0.0), 7.0);
        assert_eq!(Expr::parse("2 ^ 3 ^ 2").unwrap().eval(0.0), 512.0);
        assert_eq!(Expr::parse("-2 ^ 2").unwrap().eval(0.0), -4.0);
        assert_eq!(Expr::parse("8 / 4 / 2").unwrap().eval(0.0), 1.0);
        assert_eq!(Expr::parse("1e-3 * 1E3").unwrap().eval(0.0), 1.0);
        assert_eq!(Expr::parse("pow(t, 2)").unwrap().eval(3.0), 9.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for src in [
            "cosh(t)",
            "2*t^2",
            "exp(-t)/(1 + t^2/20)",
            "log(1 - t/3)",
            "sin(t)*cosh(2*t)",
            "pow(1+t, 1.5)",
            "t^t",
        ] {
            let e = Expr::parse(src).unwrap();
            for t in [0.3, 0.9, 1.7] {
                let j = e.jet(t);
                let (d, dd) = fd(&e, t);
                assert!((j.d - d).abs() < 1e-6 * (1.0 + d.abs()), "{src} d at {t}");
                assert!(
                    (j.dd - dd).abs() < 1e-4 * (1.0 + dd.abs()),
                    "{src} dd at {t}"
                );
            }
        }
    }

    #[test]
    fn integer_power_of_negative_base() {
        let j = Expr::parse("(t - 2)^2").unwrap().jet(1.0);
        assert_eq!((j.v, j.d, j.dd), (1.0, -2.0, 2.0));
    }

    #[test]
    fn model_node_solves_jacobi_equation() {
        let e = Expr::Model {
            kappa: -1.0,
            lambda: 1.0,
        };
        let j = e.jet(0.7);
        assert!((j.v - (-0.7f64).exp()).abs() < 1e-15);
        assert!((j.d + (-0.7f64).exp()).abs() < 1e-15);
        assert!((j.dd - (-0.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_columns() {
        let e = Expr::parse("1 + foo(t)").unwrap_err();
        assert_eq!(e.column, 5);
        let e = Expr::parse("sin(t").unwrap_err();
        assert_eq!(e.column, 6);
        let e = Expr::parse("2 # t").unwrap_err();
        assert_eq!(e.column, 3);
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("t t").is_err());
    }

    #[test]
    fn display_reparses_to_same_values() {
        for src in ["-t^2 + 3", "exp(-2*t)*cos(t)", "1/(1+t)", "pow(t, -0.5)"] {
            let e = Expr::parse(src).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            for t in [0.25, 1.5] {
                assert_eq!(e.eval(t), again.eval(t), "{src}");
            }
        }
    }

    #[test]
    fn constant_detection() {
        assert!(Expr::parse("log(2) * 3").unwrap().is_constant());
        assert!(!Expr::parse("0 * t").unwrap().is_constant());
    }
}
