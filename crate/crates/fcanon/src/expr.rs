//! Arithmetic expressions over the chart coordinates `x1..xn`, evaluated on jets.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?          right associative, so -x^2 = -(x^2)
//! atom    := number | 'pi' | variable | function '(' sum ')' | '(' sum ')'
//! ```
//!
//! Functions: `exp`, `log` (alias `ln`), `sin`, `cos`, `tan`, `tanh`, `sqrt`.

use std::fmt;

use fcanon_core::jet::Jet;
use fcanon_core::tensor::Scalar;
use fcanon_core::{Error as CoreError, Result as CoreResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at offset {position} in `{source_text}`")]
pub struct ParseError {
    pub message: String,
    /// Byte offset into the source.
    pub position: usize,
    pub source_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Tanh,
    Sqrt,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply_f64(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt(),
        }
    }

    fn apply(self, x: &Jet) -> CoreResult<Jet> {
        Ok(match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln()?,
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.sin().try_div(&x.cos())?,
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `src`, accepting variables `x1..x{dim}`.
    pub fn parse(src: &str, dim: usize) -> Result<Expr, ParseError> {
        let mut p = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            dim,
        };
        let e = p.sum()?;
        p.skip_ws();
        if p.pos < p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Largest coordinate index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
        }
    }

    /// Value when the expression uses no coordinates.
    pub fn constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Var(_) => None,
            Expr::Neg(a) => a.constant().map(|v| -v),
            Expr::Call(f, a) => a.constant().map(|v| f.apply_f64(v)),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.constant()?, b.constant()?);
                Some(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                })
            }
        }
    }

    /// Evaluates at the point whose coordinates are the jets `x`.
    pub fn eval(&self, x: &[Jet]) -> CoreResult<Jet> {
        let zero = x.first().map(|j| j.zero_like()).ok_or_else(|| {
            CoreError::Parameter("expression evaluated without coordinates".into())
        })?;
        self.eval_with(x, &zero)
    }

    fn eval_with(&self, x: &[Jet], zero: &Jet) -> CoreResult<Jet> {
        Ok(match self {
            Expr::Num(v) => zero.add_const(*v),
            Expr::Var(i) => x.get(*i).cloned().ok_or_else(|| {
                CoreError::Parameter(format!("variable x{} outside dimension {}", i + 1, x.len()))
            })?,
            Expr::Neg(a) => a.eval_with(x, zero)?.scale(-1.0),
            Expr::Call(f, a) => f.apply(&a.eval_with(x, zero)?)?,
            Expr::Bin(BinOp::Pow, a, b) => {
                let base = a.eval_with(x, zero)?;
                match b.constant() {
                    Some(k) if k.fract() == 0.0 && k.abs() <= 64.0 => {
                        let p = base.powi(k.abs() as u32);
                        if k < 0.0 {
                            p.recip()?
                        } else {
                            p
                        }
                    }
                    Some(k) => base.powf(k)?,
                    None => b.eval_with(x, zero)?.mul(&base.ln()?).exp(),
                }
            }
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_with(x, zero)?, b.eval_with(x, zero)?);
                match op {
                    BinOp::Add => a.try_add(&b)?,
                    BinOp::Sub => a.try_sub(&b)?,
                    BinOp::Mul => a.try_mul(&b)?,
                    BinOp::Div => a.try_div(&b)?,
                    BinOp::Pow => unreachable!("handled above"),
                }
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a}{s}{b})")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            message: message.into(),
            position: self.pos,
            source_text: self.src.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Expr::Bin(
                BinOp::Pow,
                Box::new(base),
                Box::new(self.unary()?),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.word(),
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError {
                message: "malformed number".into(),
                position: start,
                source_text: self.src.to_string(),
            })
    }

    fn word(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let w = &self.src[start..self.pos];
        if w == "pi" {
            return Ok(Expr::Num(std::f64::consts::PI));
        }
        if let Some(func) = Func::from_name(w) {
            if !self.eat(b'(') {
                return Err(self.error(format!("expected `(` after `{w}`")));
            }
            let arg = self.sum()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if let Some(idx) = w.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if idx >= 1 && idx <= self.dim {
                return Ok(Expr::Var(idx - 1));
            }
            return Err(ParseError {
                message: format!("variable `{w}` outside x1..x{}", self.dim),
                position: start,
                source_text: self.src.to_string(),
            });
        }
        Err(ParseError {
            message: format!("unknown identifier `{w}`"),
            position: start,
            source_text: self.src.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fcanon_core::jet::JetSpace;

    fn at(src: &str, p: &[f64]) -> Jet {
        let space = JetSpace::new(p.len(), 3).unwrap();
        let x = space.point(p, 3).unwrap();
        Expr::parse(src, p.len()).unwrap().eval(&x).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("1 + 2*3", &[0.0]).value(), 7.0);
        assert_eq!(at("2^3^2", &[0.0]).value(), 512.0);
        assert_eq!(at("-2^2", &[0.0]).value(), -4.0);
        assert_eq!(at("8/2/2", &[0.0]).value(), 2.0);
        assert_eq!(at("1.5e1 - 5", &[0.0]).value(), 10.0);
    }

    #[test]
    fn derivatives_flow_through_functions() {
        let j = at("exp(x1) * sin(x2)", &[0.3, 0.7]);
        assert!((j.partial(&[1, 1]).unwrap() - 0.3f64.exp() * 0.7f64.cos()).abs() < 1e-14);
        let j = at("x1^x2", &[2.0, 3.0]);
        assert!((j.value() - 8.0).abs() < 1e-13);
        assert!((j.partial(&[0, 1]).unwrap() - 8.0 * 2f64.ln()).abs() < 1e-12);
        let j = at("x1^-2", &[2.0]);
        assert!((j.partial(&[1]).unwrap() + 0.25).abs() < 1e-14);
        let j = at("sqrt(x1) + log(x1) + tan(x1) - tanh(x1) + cos(pi)", &[0.5]);
        let want = 0.5f64.sqrt() + 0.5f64.ln() + 0.5f64.tan() - 0.5f64.tanh() - 1.0;
        assert!((j.value() - want).abs() < 1e-14);
    }

    #[test]
    fn errors_carry_positions() {
        let e = Expr::parse("1 + x4", 3).unwrap_err();
        assert_eq!(e.position, 4);
        assert!(Expr::parse("sin x1", 2).is_err());
        assert!(Expr::parse("(1 + 2", 2).is_err());
        assert!(Expr::parse("1 2", 2).is_err());
        assert!(Expr::parse("foo(1)", 2).is_err());
        assert!(Expr::parse("", 2).is_err());
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("-x1^2 + 3*sin(x2)/x1", 2).unwrap();
        assert_eq!(Expr::parse(&e.to_string(), 2).unwrap(), e);
        assert_eq!(e.arity(), 2);
        assert_eq!(
            Expr::parse("2*pi", 1).unwrap().constant(),
            Some(2.0 * std::f64::consts::PI)
        );
    }

    #[test]
    fn domain_errors_surface() {
        let space = JetSpace::new(1, 2).unwrap();
        let x = space.point(&[-1.0], 2).unwrap();
        assert!(Expr::parse("log(x1)", 1).unwrap().eval(&x).is_err());
    }
}
