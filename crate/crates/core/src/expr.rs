//! Arithmetic expressions for integrands and limit functions.
//!
//! Grammar (whitespace is ignored between tokens):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | constant | variable | func "(" expr ")" | "(" expr ")" ;
//! func    = "exp" | "sin" | "cos" | "tan" | "log" | "sqrt" | "abs" ;
//! constant= "pi" | "e" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `2^3^2` is `2^(3^2)`. There is no implicit multiplication.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable `{name}` at position {pos} is not allowed here (allowed: {allowed})")]
    VariableNotAllowed { pos: usize, name: String, allowed: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::VariableNotAllowed { pos, .. } => *pos,
        }
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Tan,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    E,
    /// Index into the expression's variable list.
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, vals: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Pi => std::f64::consts::PI,
            Node::E => std::f64::consts::E,
            Node::Var(i) => vals[*i],
            Node::Neg(a) => -a.eval(vals),
            Node::Bin(op, a, b) => {
                let (l, r) = (a.eval(vals), b.eval(vals));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => pow(l, r),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(vals)),
        }
    }
}

fn pow(base: f64, exp: f64) -> f64 {
    // integer exponents go through powi so that x^2 == x*x bit for bit
    if exp.fract() == 0.0 && exp.abs() <= 64.0 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

/// A parsed expression together with the variable names its slots refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    vars: Vec<String>,
}

impl Expression {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Evaluates with `values[i]` bound to `vars()[i]`.
    pub fn eval(&self, values: &[f64]) -> f64 {
        assert!(values.len() >= self.vars.len(), "missing variable values");
        self.root.eval(values)
    }

    /// Evaluates with variables looked up by name; unbound variables yield `None`.
    pub fn eval_env(&self, env: &HashMap<&str, f64>) -> Option<f64> {
        let vals = self
            .vars
            .iter()
            .map(|v| env.get(v.as_str()).copied())
            .collect::<Option<Vec<_>>>()?;
        Some(self.root.eval(&vals))
    }

    /// Fully parenthesized text that parses back to the same tree.
    pub fn unparse(&self) -> String {
        let mut out = String::new();
        write_node(&self.root, &self.vars, &mut out);
        out
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.unparse())
    }
}

fn write_node(node: &Node, vars: &[String], out: &mut String) {
    match node {
        Node::Num(v) => {
            // Debug formatting is the shortest round-tripping representation
            let s = format!("{v:?}");
            out.push_str(&s);
        }
        Node::Pi => out.push_str("pi"),
        Node::E => out.push('e'),
        Node::Var(i) => out.push_str(&vars[*i]),
        Node::Neg(a) => {
            out.push_str("(-");
            write_node(a, vars, out);
            out.push(')');
        }
        Node::Bin(op, a, b) => {
            out.push('(');
            write_node(a, vars, out);
            out.push_str(match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
                BinOp::Pow => " ^ ",
            });
            write_node(b, vars, out);
            out.push(')');
        }
        Node::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_node(a, vars, out);
            out.push(')');
        }
    }
}

/// Parses `text`, accepting only the variables in `allowed_vars`.
pub fn parse(text: &str, allowed_vars: &[&str]) -> Result<Expression, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        idx: 0,
        end: text.chars().count(),
        allowed: allowed_vars,
    };
    let root = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(ParseError::Syntax {
            pos: tok.pos,
            msg: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(Expression {
        root,
        vars: allowed_vars.iter().map(|s| s.to_string()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier `{s}`"),
            TokKind::Op(c) => format!("`{c}`"),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v = lit.parse::<f64>().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{lit}`"),
            })?;
            out.push(Token {
                kind: TokKind::Num(v),
                pos: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(chars[start..i].iter().collect()),
                pos: start,
            });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
                '(' => TokKind::LParen,
                ')' => TokKind::RParen,
                _ => {
                    return Err(ParseError::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            i += 1;
            out.push(Token { kind, pos: start });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    idx: usize,
    end: usize,
    allowed: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokKind::Op(c), ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn fail_here(&self, what: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::Syntax {
                pos: t.pos,
                msg: format!("expected {what}, found {}", t.kind.describe()),
            },
            None => ParseError::Syntax {
                pos: self.end,
                msg: format!("expected {what}, found end of input"),
            },
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.idx += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.idx += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek_op() == Some('-') {
            self.idx += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.idx += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token {
                kind: TokKind::RParen, ..
            }) => {
                self.idx += 1;
                Ok(())
            }
            _ => Err(self.fail_here("`)`")),
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.fail_here("an operand"));
        };
        match tok.kind {
            TokKind::Num(v) => {
                self.idx += 1;
                Ok(Node::Num(v))
            }
            TokKind::LParen => {
                self.idx += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                self.idx += 1;
                if let Some(func) = Func::from_name(&name) {
                    match self.next() {
                        Some(Token {
                            kind: TokKind::LParen, ..
                        }) => {}
                        Some(t) => {
                            return Err(ParseError::Syntax {
                                pos: t.pos,
                                msg: format!("expected `(` after `{name}`"),
                            })
                        }
                        None => {
                            return Err(ParseError::Syntax {
                                pos: self.end,
                                msg: format!("expected `(` after `{name}`"),
                            })
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(i) = self.allowed.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Pi),
                    "e" => Ok(Node::E),
                    "x" | "y" | "w" | "z" => Err(ParseError::VariableNotAllowed {
                        pos: tok.pos,
                        name,
                        allowed: self.allowed.join(", "),
                    }),
                    _ => Err(ParseError::UnknownIdentifier { pos: tok.pos, name }),
                }
            }
            _ => Err(self.fail_here("an operand")),
        }
    }
}
