//! Small arithmetic expression language for user Lagrangians, boundary data
//! and deformation intensities.
//!
//! Expressions are compiled once into a flat tape and evaluated generically
//! over [`Scalar`], so the same compiled expression serves plain `f64`
//! evaluation and first or second derivatives through dual numbers.

use std::collections::HashMap;
use std::fmt;

use crate::dual::Scalar;
use crate::error::{Error, Result};

/// Maps variable names to argument slots.
#[derive(Debug, Clone, PartialEq)]
pub struct VarLayout {
    names: Vec<String>,
    aliases: HashMap<String, usize>,
}

impl VarLayout {
    pub fn new(names: Vec<String>) -> Self {
        VarLayout { names, aliases: HashMap::new() }
    }

    pub fn with_alias(mut self, alias: &str, slot: usize) -> Self {
        self.aliases.insert(alias.to_string(), slot);
        self
    }

    /// Slots `x1..xp, z1..z{n-p}, q{i}_{j}` with the slope block row-major.
    pub fn lagrangian(n: usize, p: usize) -> Self {
        let m = n - p;
        let mut names: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
        names.extend((1..=m).map(|i| format!("z{i}")));
        for i in 1..=m {
            for j in 1..=p {
                names.push(format!("q{i}_{j}"));
            }
        }
        let mut layout = VarLayout::new(names);
        for (alias, slot) in ["x", "y"].iter().zip(0..p) {
            layout = layout.with_alias(alias, slot);
        }
        if m == 1 {
            layout = layout.with_alias("z", p);
        }
        layout
    }

    /// Slots `x1..x{dim}` with `x, y, z` aliases for the first three.
    pub fn point(dim: usize) -> Self {
        let mut layout = VarLayout::new((1..=dim).map(|j| format!("x{j}")).collect());
        for (alias, slot) in ["x", "y", "z"].iter().zip(0..dim) {
            layout = layout.with_alias(alias, slot);
        }
        layout
    }

    /// Slots `x1..xn, xi1..xin` for homogenized (covector) functions.
    pub fn homogenized(n: usize) -> Self {
        let mut names: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
        names.extend((1..=n).map(|j| format!("xi{j}")));
        VarLayout::new(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn slot(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name).or_else(|| self.aliases.get(name).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    PowI(usize, i32),
    PowF(usize, f64),
    Pow(usize, usize),
    Sqrt(usize),
    Exp(usize),
    Ln(usize),
    Sin(usize),
    Cos(usize),
    Tan(usize),
    Abs(usize),
}

/// A compiled expression.
#[derive(Clone, PartialEq)]
pub struct Expr {
    tape: Vec<Node>,
    arity: usize,
    source: String,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str, layout: &VarLayout) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0, layout, tape: Vec::new() };
        parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected {:?} in {source:?}",
                parser.tokens[parser.pos]
            )));
        }
        Ok(Expr { tape: parser.tape, arity: layout.len(), source: source.trim().to_string() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Number of argument slots the expression was compiled against.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval<S: Scalar>(&self, args: &[S]) -> S {
        debug_assert_eq!(args.len(), self.arity);
        let mut v: Vec<S> = Vec::with_capacity(self.tape.len());
        for node in &self.tape {
            let r = match *node {
                Node::Const(c) => S::cst(c),
                Node::Var(k) => args[k],
                Node::Add(a, b) => v[a] + v[b],
                Node::Sub(a, b) => v[a] - v[b],
                Node::Mul(a, b) => v[a] * v[b],
                Node::Div(a, b) => v[a] / v[b],
                Node::Neg(a) => -v[a],
                Node::PowI(a, k) => v[a].powi(k),
                Node::PowF(a, e) => v[a].powf(e),
                Node::Pow(a, b) => v[a].pow(v[b]),
                Node::Sqrt(a) => v[a].sqrt(),
                Node::Exp(a) => v[a].exp(),
                Node::Ln(a) => v[a].ln(),
                Node::Sin(a) => v[a].sin(),
                Node::Cos(a) => v[a].cos(),
                Node::Tan(a) => v[a].tan(),
                Node::Abs(a) => v[a].abs(),
            };
            v.push(r);
        }
        *v.last().expect("expression tape is never empty")
    }

    pub fn eval_f64(&self, args: &[f64]) -> f64 {
        self.eval(args)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
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
                    .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
                out.push(Token::Num(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(c));
                i += 1;
            }
            '\u{2212}' => {
                out.push(Token::Op('-'));
                i += 1;
            }
            '\u{00d7}' => {
                out.push(Token::Op('*'));
                i += 1;
            }
            '\u{00f7}' => {
                out.push(Token::Op('/'));
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    layout: &'a VarLayout,
    tape: Vec<Node>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn push(&mut self, node: Node) -> usize {
        // fold constant subtrees
        let folded = match node {
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                match (self.tape[a], self.tape[b]) {
                    (Node::Const(x), Node::Const(y)) => Some(match node {
                        Node::Add(..) => x + y,
                        Node::Sub(..) => x - y,
                        Node::Mul(..) => x * y,
                        Node::Div(..) => x / y,
                        _ => x.powf(y),
                    }),
                    _ => None,
                }
            }
            Node::Neg(a) => match self.tape[a] {
                Node::Const(x) => Some(-x),
                _ => None,
            },
            _ => None,
        };
        self.tape.push(folded.map(Node::Const).unwrap_or(node));
        self.tape.len() - 1
    }

    fn expect(&mut self, tok: Token) -> Result<()> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            other => Err(Error::Parse(format!("expected {tok:?}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<usize> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = self.push(if c == '+' { Node::Add(lhs, rhs) } else { Node::Sub(lhs, rhs) });
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<usize> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = self.push(if c == '*' { Node::Mul(lhs, rhs) } else { Node::Div(lhs, rhs) });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<usize> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                let a = self.unary()?;
                Ok(self.push(Node::Neg(a)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<usize> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(self.make_pow(base, exponent));
        }
        Ok(base)
    }

    fn make_pow(&mut self, base: usize, exponent: usize) -> usize {
        match self.tape[exponent] {
            Node::Const(e) if e.fract() == 0.0 && e.abs() <= 64.0 => self.push(Node::PowI(base, e as i32)),
            Node::Const(0.5) => self.push(Node::Sqrt(base)),
            Node::Const(e) => self.push(Node::PowF(base, e)),
            _ => self.push(Node::Pow(base, exponent)),
        }
    }

    fn atom(&mut self) -> Result<usize> {
        let tok = self.peek().cloned().ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(self.push(Node::Const(v))),
            Token::LParen => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Token::Ident(name) => {
                if let Some(Token::LParen) = self.peek() {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while let Some(Token::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Token::RParen)?;
                    return self.call(&name, &args);
                }
                if let Some(slot) = self.layout.slot(&name) {
                    return Ok(self.push(Node::Var(slot)));
                }
                match name.as_str() {
                    "pi" => Ok(self.push(Node::Const(std::f64::consts::PI))),
                    _ => Err(Error::Parse(format!("unknown variable {name:?}"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected {other:?}"))),
        }
    }

    fn call(&mut self, name: &str, args: &[usize]) -> Result<usize> {
        let unary = |n: &str| -> Result<()> {
            if args.len() == 1 {
                Ok(())
            } else {
                Err(Error::Parse(format!("{n} takes one argument")))
            }
        };
        let node = match name {
            "sqrt" => {
                unary(name)?;
                Node::Sqrt(args[0])
            }
            "exp" => {
                unary(name)?;
                Node::Exp(args[0])
            }
            "ln" | "log" => {
                unary(name)?;
                Node::Ln(args[0])
            }
            "sin" => {
                unary(name)?;
                Node::Sin(args[0])
            }
            "cos" => {
                unary(name)?;
                Node::Cos(args[0])
            }
            "tan" => {
                unary(name)?;
                Node::Tan(args[0])
            }
            "abs" => {
                unary(name)?;
                Node::Abs(args[0])
            }
            "pow" => {
                if args.len() != 2 {
                    return Err(Error::Parse("pow takes two arguments".into()));
                }
                return Ok(self.make_pow(args[0], args[1]));
            }
            _ => return Err(Error::Parse(format!("unknown function {name:?}"))),
        };
        Ok(self.push(node))
    }
}
