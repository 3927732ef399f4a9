//! A tiny expression language for initial density profiles, e.g.
//! `0.5 + 0.2*cos(2*pi*x)`.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)*          (left associative)
//! exponent:= '-' exponent | atom
//! atom    := number | 'x' | 'pi' | func '(' sum ')' | '(' sum ')'
//! func    := 'sin' | 'cos' | 'exp'
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Pi,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero at x = {0}")]
    DivisionByZero(f64),
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.into() }
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
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
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
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.eat(b'^') {
            let exp = self.exponent()?;
            base = Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.syntax("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let func = match name {
            "x" => return Ok(Expr::X),
            "pi" => return Ok(Expr::Pi),
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            _ => return Err(ParseError::UnknownIdentifier { name: name.to_string(), offset: start }),
        };
        if !self.eat(b'(') {
            return Err(self.syntax(format!("expected `(` after `{name}`")));
        }
        let arg = self.sum()?;
        if !self.eat(b')') {
            return Err(self.syntax("expected `)`"));
        }
        Ok(Expr::Call(func, Box::new(arg)))
    }
}

impl Expr {
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Pi => std::f64::consts::PI,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Call(f, e) => f.apply(e.eval(x)?),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero(x));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
        })
    }
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Canonical, fully parenthesised printout.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => f.write_str("x"),
            Expr::Pi => f.write_str("pi"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("profile `{text}` is negative ({value}) at x = {x}")]
    Negative { text: String, x: f64, value: f64 },
    #[error("profile `{text}` is not finite at x = {x}")]
    NonFinite { text: String, x: f64 },
}

/// A parsed initial profile checked to be finite and non-negative on a
/// sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    text: String,
    expr: Expr,
}

impl Profile {
    pub const CHECK_POINTS: usize = 10_000;

    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let expr = parse(text)?;
        let prof = Profile { text: text.to_string(), expr };
        for i in 0..Self::CHECK_POINTS {
            let x = i as f64 / Self::CHECK_POINTS as f64;
            let v = prof.expr.eval(x)?;
            if !v.is_finite() {
                return Err(ProfileError::NonFinite { text: prof.text.clone(), x });
            }
            if v < 0.0 {
                return Err(ProfileError::Negative { text: prof.text.clone(), x, value: v });
            }
        }
        Ok(prof)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Evaluate; the profile was checked on the sample grid, so errors here
    /// are only possible off-grid and are mapped to 0.
    pub fn value(&self, x: f64) -> f64 {
        self.expr.eval(x).unwrap_or(0.0).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn num(v: f64) -> Box<Expr> {
        Box::new(Expr::Num(v))
    }

    #[test]
    fn parses_constant() {
        assert_eq!(parse("0.5").unwrap(), Expr::Num(0.5));
        assert_eq!(parse("  1e-3 ").unwrap(), Expr::Num(1e-3));
    }

    #[test]
    fn precedence_of_mul_over_add() {
        let e = parse("0.5+0.2*cos(2*pi*x)").unwrap();
        let expect = Expr::Bin(
            BinOp::Add,
            num(0.5),
            Box::new(Expr::Bin(
                BinOp::Mul,
                num(0.2),
                Box::new(Expr::Call(
                    Func::Cos,
                    Box::new(Expr::Bin(
                        BinOp::Mul,
                        Box::new(Expr::Bin(BinOp::Mul, num(2.0), Box::new(Expr::Pi))),
                        Box::new(Expr::X),
                    )),
                )),
            )),
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        assert_eq!(parse("-x^2").unwrap().eval(3.0).unwrap(), -9.0);
        assert_eq!(parse("2^-1").unwrap().eval(0.0).unwrap(), 0.5);
        // left associative
        assert_eq!(parse("2^3^2").unwrap().eval(0.0).unwrap(), 64.0);
        assert_eq!(parse("8-2-1").unwrap().eval(0.0).unwrap(), 5.0);
        assert_eq!(parse("8/2/2").unwrap().eval(0.0).unwrap(), 2.0);
    }

    #[test]
    fn incomplete_expression_reports_offset() {
        let err = parse("2*x +").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 5, .. }), "{err:?}");
        assert_eq!(parse("(1+2").unwrap_err().offset(), 4);
        assert_eq!(parse("1 2").unwrap_err().offset(), 2);
        assert!(parse("").is_err());
        assert!(parse("1.").is_ok());
        assert!(parse(".").is_err());
    }

    #[test]
    fn unknown_identifiers_rejected() {
        assert_eq!(
            parse("0.5 + y").unwrap_err(),
            ParseError::UnknownIdentifier { name: "y".into(), offset: 6 }
        );
        assert!(matches!(parse("tan(x)"), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("cos x"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn eval_examples() {
        let e = parse("0.5+0.2*cos(2*pi*x)").unwrap();
        assert!((e.eval(0.0).unwrap() - 0.7).abs() < 1e-15);
        assert!((e.eval(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(parse("x^2").unwrap().eval(3.0).unwrap(), 9.0);
        assert_eq!(parse("exp(0) + sin(0)").unwrap().eval(0.3).unwrap(), 1.0);
    }

    #[test]
    fn division_by_zero_is_an_eval_error() {
        let e = parse("1/(x-0.5)").unwrap();
        assert_eq!(e.eval(0.5), Err(EvalError::DivisionByZero(0.5)));
        assert!(e.eval(0.25).is_ok());
    }

    #[test]
    fn profile_checks() {
        assert!(Profile::parse("0.5+0.2*cos(2*pi*x)").is_ok());
        assert!(matches!(Profile::parse("cos(2*pi*x)"), Err(ProfileError::Negative { .. })));
        assert!(matches!(Profile::parse("1/x"), Err(ProfileError::Eval(_))));
        assert!(matches!(Profile::parse("z"), Err(ProfileError::Parse(_))));
    }

    // Independent evaluator for generated trees.
    fn oracle(e: &Expr, x: f64) -> Option<f64> {
        use std::f64::consts::PI;
        match e {
            Expr::Num(v) => Some(*v),
            Expr::X => Some(x),
            Expr::Pi => Some(PI),
            Expr::Neg(a) => oracle(a, x).map(|v| -v),
            Expr::Call(Func::Sin, a) => oracle(a, x).map(f64::sin),
            Expr::Call(Func::Cos, a) => oracle(a, x).map(f64::cos),
            Expr::Call(Func::Exp, a) => oracle(a, x).map(f64::exp),
            Expr::Bin(op, a, b) => {
                let (a, b) = (oracle(a, x)?, oracle(b, x)?);
                match op {
                    BinOp::Add => Some(a + b),
                    BinOp::Sub => Some(a - b),
                    BinOp::Mul => Some(a * b),
                    BinOp::Div if b == 0.0 => None,
                    BinOp::Div => Some(a / b),
                    BinOp::Pow => Some(a.powf(b)),
                }
            }
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|n| Expr::Num(n as f64 / 100.0)),
            Just(Expr::X),
            Just(Expr::Pi),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp)],
                    inner.clone()
                )
                    .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(parse(&reparsed.to_string()).unwrap(), reparsed);
        }

        #[test]
        fn eval_agrees_with_oracle(e in arb_expr(), x in 0.0f64..1.0) {
            let reparsed = parse(&e.to_string()).unwrap();
            match (reparsed.eval(x), oracle(&e, x)) {
                (Ok(a), Some(b)) => {
                    if a.is_finite() || b.is_finite() {
                        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{} vs {}", a, b);
                    } else {
                        prop_assert!(a.is_nan() == b.is_nan());
                    }
                }
                (Err(_), None) => {}
                (a, b) => prop_assert!(false, "mismatch {:?} vs {:?}", a, b),
            }
        }
    }
}
