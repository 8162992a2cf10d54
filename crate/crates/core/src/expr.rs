//! Scalar expression language for right-hand sides, disturbances and
//! delay histories.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          (right-associative)
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are the variables `t`, `u`, `ud`, or declared parameters.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at offset {offset}: {message}; expected {}", expected.join(" or "))]
pub struct ParseError {
    /// Byte offset into the source.
    pub offset: usize,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt of negative number {0}")]
    SqrtOfNegative(f64),
    #[error("negative base {base} raised to non-integer power {exp}")]
    NegativeBasePower { base: f64, exp: f64 },
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    U,
    Ud,
}

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
    Abs,
    Tanh,
    Sqrt,
    Min,
    Max,
    Sat,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            "sat" => Func::Sat,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
            Func::Sat => "sat",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Variable and parameter bindings for [`Expr::eval`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub t: Option<f64>,
    pub u: Option<f64>,
    pub ud: Option<f64>,
    pub params: Option<&'a BTreeMap<String, f64>>,
}

impl<'a> Env<'a> {
    pub fn new(params: &'a BTreeMap<String, f64>) -> Self {
        Env {
            params: Some(params),
            ..Env::default()
        }
    }

    pub fn t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn u(mut self, u: f64) -> Self {
        self.u = Some(u);
        self
    }

    pub fn ud(mut self, ud: f64) -> Self {
        self.ud = Some(ud);
        self
    }
}

impl Expr {
    pub fn eval(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(x) => *x,
            Expr::Var(v) => {
                let (val, name) = match v {
                    Var::T => (env.t, "t"),
                    Var::U => (env.u, "u"),
                    Var::Ud => (env.ud, "ud"),
                };
                val.ok_or_else(|| EvalError::Unbound(name.to_string()))?
            }
            Expr::Param(name) => *env
                .params
                .and_then(|p| p.get(name))
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval(env)?;
                let b = r.eval(env)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(EvalError::NegativeBasePower { base: a, exp: b });
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(f, args) => {
                let x = args[0].eval(env)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Abs => x.abs(),
                    Func::Tanh => x.tanh(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::SqrtOfNegative(x));
                        }
                        x.sqrt()
                    }
                    Func::Min => x.min(args[1].eval(env)?),
                    Func::Max => x.max(args[1].eval(env)?),
                    Func::Sat => x.clamp(-1.0, 1.0),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// True if the expression mentions the delayed state `ud`.
    pub fn uses_delay(&self) -> bool {
        match self {
            Expr::Var(Var::Ud) => true,
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => false,
            Expr::Neg(e) => e.uses_delay(),
            Expr::Bin(_, l, r) => l.uses_delay() || r.uses_delay(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_delay),
        }
    }

    /// True if the expression mentions the state `u` or `ud`.
    pub fn uses_state(&self) -> bool {
        match self {
            Expr::Var(Var::U) | Expr::Var(Var::Ud) => true,
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => false,
            Expr::Neg(e) => e.uses_state(),
            Expr::Bin(_, l, r) => l.uses_state() || r.uses_state(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_state),
        }
    }
}

// Fully parenthesized so the output reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::U) => f.write_str("u"),
            Expr::Var(Var::Ud) => f.write_str("ud"),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {sym} {r})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
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
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                    expected: vec!["number".into()],
                })?;
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                    expected: vec!["expression".into()],
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["`)`"]));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::lookup(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.error(&["`(`"]));
                    }
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    if *self.peek() != Tok::RParen {
                        return Err(self.error(&["`,`", "`)`"]));
                    }
                    self.bump();
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            offset: at,
                            message: format!(
                                "`{}` takes {} argument(s), got {}",
                                func.name(),
                                func.arity(),
                                args.len()
                            ),
                            expected: vec![format!("{} argument(s)", func.arity())],
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                match name.as_str() {
                    "t" => Ok(Expr::Var(Var::T)),
                    "u" => Ok(Expr::Var(Var::U)),
                    "ud" => Ok(Expr::Var(Var::Ud)),
                    _ if self.params.contains(&name.as_str()) => Ok(Expr::Param(name)),
                    _ => Err(ParseError {
                        offset: at,
                        message: format!("unknown identifier `{name}`"),
                        expected: vec!["t, u, ud, a declared parameter or a function".into()],
                    }),
                }
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}

/// Parse `source`, accepting the listed parameter names as identifiers.
pub fn parse(source: &str, params: &[&str]) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        params,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Parse with the keys of a parameter map declared.
pub fn parse_with(source: &str, params: &BTreeMap<String, f64>) -> Result<Expr, ParseError> {
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    parse(source, &names)
}
