//! Index functions `ω → ω` written in a small expression language.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr := name | name "(" expr {"," expr} ")" | integer
//! ```
//!
//! Catalog: `id`, `const(c)`, `ruler` (2-adic valuation of `n+1`),
//! `floorlog2` (`⌊log₂(n+1)⌋`), `pow2`, `add`, `mul`, `div`, `min`, `max`
//! and `compose`. Unary entries used without arguments apply to the
//! argument itself, so `ruler` and `ruler(id)` are the same function. All
//! arithmetic is on `u64` and overflow is an error, never a wrap.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at byte {pos}")]
    UnknownName { name: String, pos: usize },
    #[error("`{name}` at byte {pos} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        pos: usize,
        expected: &'static str,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("overflow in `{op}` while evaluating at n = {at}")]
    Overflow { op: &'static str, at: u64 },
    #[error("division by zero while evaluating at n = {at}")]
    DivisionByZero { at: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(u64),
    Id,
    Ruler(Box<Expr>),
    FloorLog2(Box<Expr>),
    Pow2(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    /// `Compose(outer, inner)` is `n ↦ outer(inner(n))`.
    Compose(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, n: u64) -> Result<u64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Id => Ok(n),
            Expr::Ruler(e) => {
                let x = e.eval(n)?;
                let succ = x
                    .checked_add(1)
                    .ok_or(EvalError::Overflow { op: "ruler", at: n })?;
                Ok(u64::from(succ.trailing_zeros()))
            }
            Expr::FloorLog2(e) => {
                let x = e.eval(n)?;
                let succ = x.checked_add(1).ok_or(EvalError::Overflow {
                    op: "floorlog2",
                    at: n,
                })?;
                Ok(u64::from(succ.ilog2()))
            }
            Expr::Pow2(e) => {
                let x = e.eval(n)?;
                if x >= 64 {
                    return Err(EvalError::Overflow { op: "pow2", at: n });
                }
                Ok(1u64 << x)
            }
            Expr::Add(a, b) => a
                .eval(n)?
                .checked_add(b.eval(n)?)
                .ok_or(EvalError::Overflow { op: "add", at: n }),
            Expr::Mul(a, b) => a
                .eval(n)?
                .checked_mul(b.eval(n)?)
                .ok_or(EvalError::Overflow { op: "mul", at: n }),
            Expr::Div(a, b) => {
                let d = b.eval(n)?;
                if d == 0 {
                    return Err(EvalError::DivisionByZero { at: n });
                }
                Ok(a.eval(n)? / d)
            }
            Expr::Min(a, b) => Ok(a.eval(n)?.min(b.eval(n)?)),
            Expr::Max(a, b) => Ok(a.eval(n)?.max(b.eval(n)?)),
            Expr::Compose(outer, inner) => outer.eval(inner.eval(n)?),
        }
    }

    fn write_unary(f: &mut fmt::Formatter<'_>, name: &str, arg: &Expr) -> fmt::Result {
        if *arg == Expr::Id {
            f.write_str(name)
        } else {
            write!(f, "{name}({arg})")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "const({c})"),
            Expr::Id => f.write_str("id"),
            Expr::Ruler(e) => Expr::write_unary(f, "ruler", e),
            Expr::FloorLog2(e) => Expr::write_unary(f, "floorlog2", e),
            Expr::Pow2(e) => Expr::write_unary(f, "pow2", e),
            Expr::Add(a, b) => write!(f, "add({a},{b})"),
            Expr::Mul(a, b) => write!(f, "mul({a},{b})"),
            Expr::Div(a, b) => write!(f, "div({a},{b})"),
            Expr::Min(a, b) => write!(f, "min({a},{b})"),
            Expr::Max(a, b) => write!(f, "max({a},{b})"),
            Expr::Compose(a, b) => write!(f, "compose({a},{b})"),
        }
    }
}

/// A parsed index function together with its display name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FuncSpec {
    expr: Expr,
    name: String,
}

impl FuncSpec {
    pub fn new(expr: Expr) -> Self {
        let name = expr.to_string();
        FuncSpec { expr, name }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse_funcspec(text)
    }

    pub fn id() -> Self {
        FuncSpec::new(Expr::Id)
    }

    pub fn constant(c: u64) -> Self {
        FuncSpec::new(Expr::Const(c))
    }

    pub fn ruler() -> Self {
        FuncSpec::new(Expr::Ruler(Box::new(Expr::Id)))
    }

    pub fn pow2_of(inner: &FuncSpec) -> Self {
        FuncSpec::new(Expr::Pow2(Box::new(inner.expr.clone())))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &FuncSpec) -> Self {
        FuncSpec::new(Expr::Compose(
            Box::new(self.expr.clone()),
            Box::new(inner.expr.clone()),
        ))
    }

    pub fn min_with(&self, other: &FuncSpec) -> Self {
        FuncSpec::new(Expr::Min(
            Box::new(self.expr.clone()),
            Box::new(other.expr.clone()),
        ))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, n: u64) -> Result<u64, EvalError> {
        self.expr.eval(n)
    }
}

impl fmt::Display for FuncSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for FuncSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_funcspec(s)
    }
}

impl Serialize for FuncSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name)
    }
}

impl<'de> Deserialize<'de> for FuncSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_funcspec(&text).map_err(serde::de::Error::custom)
    }
}

pub fn parse_funcspec(text: &str) -> Result<FuncSpec, ParseError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.syntax("trailing input"));
    }
    Ok(FuncSpec::new(expr))
}

pub fn eval_func(spec: &FuncSpec, n: u64) -> Result<u64, EvalError> {
    spec.eval(n)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn syntax(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => self.integer().map(Expr::Const),
            Some(c) if c.is_ascii_alphabetic() => self.call(),
            Some(_) => Err(self.syntax("expected a name or an integer")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        digits.parse().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: format!("integer `{digits}` does not fit in 64 bits"),
        })
    }

    fn call(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii name")
            .to_string();
        let mut args = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                if name == "const" {
                    if !matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                        return Err(self.syntax("`const` takes an integer literal"));
                    }
                    args.push(Expr::Const(self.integer()?));
                } else {
                    args.push(self.expr()?);
                }
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.syntax("expected `,` or `)`")),
                }
            }
        }
        build(&name, start, args)
    }
}

fn build(name: &str, pos: usize, mut args: Vec<Expr>) -> Result<Expr, ParseError> {
    let arity = |expected: &'static str, found: usize| ParseError::Arity {
        name: name.to_string(),
        pos,
        expected,
        found,
    };
    let unary = |args: Vec<Expr>| -> Result<Box<Expr>, ParseError> {
        match args.len() {
            0 => Ok(Box::new(Expr::Id)),
            1 => Ok(Box::new(args.into_iter().next().expect("one argument"))),
            n => Err(arity("0 or 1", n)),
        }
    };
    let binary = |args: Vec<Expr>| -> Result<(Box<Expr>, Box<Expr>), ParseError> {
        if args.len() != 2 {
            return Err(arity("2", args.len()));
        }
        let mut it = args.into_iter();
        Ok((
            Box::new(it.next().expect("lhs")),
            Box::new(it.next().expect("rhs")),
        ))
    };
    match name {
        "id" => {
            if args.is_empty() {
                Ok(Expr::Id)
            } else {
                Err(arity("0", args.len()))
            }
        }
        "const" => {
            if args.len() == 1 {
                Ok(args.pop().expect("one argument"))
            } else {
                Err(arity("1", args.len()))
            }
        }
        "ruler" => Ok(Expr::Ruler(unary(args)?)),
        "floorlog2" => Ok(Expr::FloorLog2(unary(args)?)),
        "pow2" => Ok(Expr::Pow2(unary(args)?)),
        "add" => binary(args).map(|(a, b)| Expr::Add(a, b)),
        "mul" => binary(args).map(|(a, b)| Expr::Mul(a, b)),
        "div" => binary(args).map(|(a, b)| Expr::Div(a, b)),
        "min" => binary(args).map(|(a, b)| Expr::Min(a, b)),
        "max" => binary(args).map(|(a, b)| Expr::Max(a, b)),
        "compose" => {
            if args.len() < 2 {
                return Err(arity("at least 2", args.len()));
            }
            // compose(a, b, c) = a ∘ (b ∘ c)
            let mut acc = args.pop().expect("innermost");
            while let Some(outer) = args.pop() {
                acc = Expr::Compose(Box::new(outer), Box::new(acc));
            }
            Ok(acc)
        }
        _ => Err(ParseError::UnknownName {
            name: name.to_string(),
            pos,
        }),
    }
}

/// Preimage of one value below a horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberReport {
    pub value: u64,
    pub members: Vec<u64>,
    pub truncated_at: u64,
}

/// Groups `0..horizon` by function value, sorted by value.
pub fn fiber_census(spec: &FuncSpec, horizon: u64) -> Result<Vec<FiberReport>, EvalError> {
    let mut fibers: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for n in 0..horizon {
        fibers.entry(spec.eval(n)?).or_default().push(n);
    }
    Ok(fibers
        .into_iter()
        .map(|(value, members)| FiberReport {
            value,
            members,
            truncated_at: horizon,
        })
        .collect())
}
