//! Computed-column formulas.
//!
//! Grammar (EBNF):
//!
//! ```text
//! formula  = concat ;
//! concat   = additive { "&" additive } ;
//! additive = term { ( "+" | "-" ) term } ;
//! term     = unary { ( "*" | "/" | "×" | "÷" ) unary } ;
//! unary    = "-" unary | primary ;
//! primary  = number | string | func "(" formula ")" | column | "(" formula ")" ;
//! func     = "abs" | "round" | "len" | "lower" | "upper" ;
//! column   = ident | "[" { any char except "]" } "]" ;
//! ident    = ( letter | "_" ) { letter | digit | "_" } ;
//! number   = digit { digit } [ "." { digit } ] ;
//! string   = '"' { any char except '"' } '"' ;
//! ```
//!
//! Arithmetic takes numbers; `&` concatenates the text rendering of any
//! values. A missing referenced cell makes the row's result missing, and so
//! does division by zero.

use std::fmt;

use super::{require_column, ToolError};
use crate::table::{Cell, Column, TableInstance};
use crate::value::{CellValue, ValueType};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Abs,
    Round,
    Len,
    Lower,
    Upper,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "abs" => Func::Abs,
            "round" => Func::Round,
            "len" => Func::Len,
            "lower" => Func::Lower,
            "upper" => Func::Upper,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Column(String),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Num,
    Str,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Num => "number",
            Kind::Str => "text",
        })
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
}

fn parse_err(msg: impl Into<String>) -> ToolError {
    ToolError::FormulaParse(msg.into())
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().collect(), pos: 0, src }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> Result<Expr, ToolError> {
        let e = self.concat()?;
        if let Some(c) = self.peek() {
            return Err(parse_err(format!("unexpected {c:?} at {} in {:?}", self.pos, self.src)));
        }
        Ok(e)
    }

    fn concat(&mut self) -> Result<Expr, ToolError> {
        let mut lhs = self.additive()?;
        while self.eat('&') {
            let rhs = self.additive()?;
            lhs = Expr::Binary(BinOp::Concat, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, ToolError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ToolError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some('*' | '×') => BinOp::Mul,
                Some('/' | '÷') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ToolError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ToolError> {
        match self.peek() {
            None => Err(parse_err(format!("unexpected end of formula {:?}", self.src))),
            Some('(') => {
                self.pos += 1;
                let e = self.concat()?;
                if !self.eat(')') {
                    return Err(parse_err("missing closing parenthesis"));
                }
                Ok(e)
            }
            Some('"') => {
                self.pos += 1;
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|&c| c != '"') {
                    self.pos += 1;
                }
                if self.pos >= self.chars.len() {
                    return Err(parse_err("unterminated string literal"));
                }
                let s: String = self.chars[start..self.pos].iter().collect();
                self.pos += 1;
                Ok(Expr::Text(s))
            }
            Some('[') => {
                self.pos += 1;
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|&c| c != ']') {
                    self.pos += 1;
                }
                if self.pos >= self.chars.len() {
                    return Err(parse_err("unterminated column reference"));
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                self.pos += 1;
                Ok(Expr::Column(name))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit() || *c == '.') {
                    self.pos += 1;
                }
                let lit: String = self.chars[start..self.pos].iter().collect();
                lit.parse::<f64>().map(Expr::Number).map_err(|_| parse_err(format!("bad number {lit:?}")))
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|c| c.is_alphanumeric() || *c == '_') {
                    self.pos += 1;
                }
                let ident: String = self.chars[start..self.pos].iter().collect();
                if self.peek() == Some('(') {
                    let func = Func::from_name(&ident.to_lowercase())
                        .ok_or_else(|| parse_err(format!("unknown function {ident:?}")))?;
                    self.pos += 1;
                    let arg = self.concat()?;
                    if !self.eat(')') {
                        return Err(parse_err("missing closing parenthesis after function argument"));
                    }
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                Ok(Expr::Column(ident))
            }
            Some(c) => Err(parse_err(format!("unexpected {c:?} in {:?}", self.src))),
        }
    }
}

pub fn parse_formula(src: &str) -> Result<Expr, ToolError> {
    Parser::new(src).parse()
}

impl Expr {
    pub fn columns(&self, out: &mut Vec<String>) {
        match self {
            Expr::Column(c) => {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.columns(out),
            Expr::Binary(_, a, b) => {
                a.columns(out);
                b.columns(out);
            }
            Expr::Number(_) | Expr::Text(_) => {}
        }
    }

    fn check(&self, t: &TableInstance) -> Result<Kind, ToolError> {
        let need_num = |k: Kind, what: &str| {
            if k == Kind::Num {
                Ok(())
            } else {
                Err(ToolError::TypeMismatch(format!("{what} needs a number, got {k}")))
            }
        };
        Ok(match self {
            Expr::Number(_) => Kind::Num,
            Expr::Text(_) => Kind::Str,
            Expr::Column(c) => {
                let i = require_column(t, c)?;
                match t.columns[i].declared_type {
                    ValueType::Number => Kind::Num,
                    _ => Kind::Str,
                }
            }
            Expr::Neg(e) => {
                need_num(e.check(t)?, "negation")?;
                Kind::Num
            }
            Expr::Call(f, e) => {
                let k = e.check(t)?;
                match f {
                    Func::Abs | Func::Round => {
                        need_num(k, "abs/round")?;
                        Kind::Num
                    }
                    Func::Len | Func::Lower | Func::Upper => {
                        if k != Kind::Str {
                            return Err(ToolError::TypeMismatch(format!("{f:?} needs text, got {k}")));
                        }
                        if *f == Func::Len {
                            Kind::Num
                        } else {
                            Kind::Str
                        }
                    }
                }
            }
            Expr::Binary(BinOp::Concat, a, b) => {
                a.check(t)?;
                b.check(t)?;
                Kind::Str
            }
            Expr::Binary(op, a, b) => {
                need_num(a.check(t)?, &format!("{op:?}"))?;
                need_num(b.check(t)?, &format!("{op:?}"))?;
                Kind::Num
            }
        })
    }

    fn eval(&self, t: &TableInstance, row: &[Cell]) -> CellValue {
        match self {
            Expr::Number(n) => CellValue::number(*n),
            Expr::Text(s) => CellValue::text(s.clone()),
            Expr::Column(c) => {
                let i = t.column_index(c).expect("checked before evaluation");
                match &row[i].value {
                    CellValue::Missing => CellValue::Missing,
                    v @ CellValue::Number(_) => v.clone(),
                    other => CellValue::Text(other.to_string()),
                }
            }
            Expr::Neg(e) => match e.eval(t, row) {
                CellValue::Number(n) => CellValue::number(-n),
                _ => CellValue::Missing,
            },
            Expr::Call(f, e) => match (f, e.eval(t, row)) {
                (_, CellValue::Missing) => CellValue::Missing,
                (Func::Abs, CellValue::Number(n)) => CellValue::number(n.abs()),
                (Func::Round, CellValue::Number(n)) => CellValue::number(n.round()),
                (Func::Len, CellValue::Text(s)) => CellValue::number(s.chars().count() as f64),
                (Func::Lower, CellValue::Text(s)) => CellValue::Text(s.to_lowercase()),
                (Func::Upper, CellValue::Text(s)) => CellValue::Text(s.to_uppercase()),
                _ => CellValue::Missing,
            },
            Expr::Binary(op, a, b) => {
                let (va, vb) = (a.eval(t, row), b.eval(t, row));
                if va.is_missing() || vb.is_missing() {
                    return CellValue::Missing;
                }
                if *op == BinOp::Concat {
                    return CellValue::Text(format!("{va}{vb}"));
                }
                let (Some(x), Some(y)) = (va.as_number(), vb.as_number()) else {
                    return CellValue::Missing;
                };
                match op {
                    BinOp::Add => CellValue::number(x + y),
                    BinOp::Sub => CellValue::number(x - y),
                    BinOp::Mul => CellValue::number(x * y),
                    BinOp::Div if y == 0.0 => CellValue::Missing,
                    BinOp::Div => CellValue::number(x / y),
                    BinOp::Concat => unreachable!(),
                }
            }
        }
    }
}

/// Appends a column computed by `formula`. The new column's type follows the
/// formula's result type; computed cells carry no provenance.
pub fn add_computed_column(t: &TableInstance, formula: &str, new_name: &str) -> Result<TableInstance, ToolError> {
    if new_name.trim().is_empty() {
        return Err(ToolError::BadArgument("new column name must not be empty".into()));
    }
    if t.column_index(new_name).is_some() {
        return Err(ToolError::BadArgument(format!("column {new_name:?} already exists")));
    }
    let expr = parse_formula(formula)?;
    let kind = expr.check(t)?;
    let declared = match kind {
        Kind::Num => ValueType::Number,
        Kind::Str => ValueType::Text,
    };
    let mut out = t.clone();
    out.columns.push(Column::new(new_name, declared));
    for (orig, row) in t.rows.iter().zip(out.rows.iter_mut()) {
        row.push(Cell::new(expr.eval(t, orig)));
    }
    Ok(out)
}
