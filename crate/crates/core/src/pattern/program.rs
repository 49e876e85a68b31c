//! The fill-program DSL and its interpreter.
//!
//! ```text
//! program := atom | concat(atom, atom, ...)
//! atom    := leaf | case-fold(leaf) | strip(leaf) | strip(case-fold(leaf))
//! leaf    := constant(s) | column-ref(c) | substring(c, token, k) | split-take(c, delim, k)
//! ```
//!
//! Size counts primitives, so `concat(col:first, constant(" "), col:last)`
//! has size 4. A referenced cell that is missing, or an index past the last
//! token or piece, makes the whole output missing.

use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Other cells of the row, by column name. `None` is a missing cell.
pub type InputRow = Vec<(String, Option<String>)>;

pub const MAX_PROGRAM_SIZE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenClass {
    /// Digits with optional `,`/`.` groups: `1,299.00`.
    Number,
    Digits,
    Word,
    Alnum,
}

impl TokenClass {
    pub const ALL: [TokenClass; 4] = [TokenClass::Number, TokenClass::Digits, TokenClass::Word, TokenClass::Alnum];

    fn regex(self) -> &'static Regex {
        static RES: OnceLock<[Regex; 4]> = OnceLock::new();
        let all = RES.get_or_init(|| {
            [
                Regex::new(r"[0-9]+(?:[.,][0-9]+)*").expect("valid"),
                Regex::new(r"[0-9]+").expect("valid"),
                Regex::new(r"[A-Za-z]+").expect("valid"),
                Regex::new(r"[A-Za-z0-9]+").expect("valid"),
            ]
        });
        &all[self as usize]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TokenClass::Number => "number",
            TokenClass::Digits => "digits",
            TokenClass::Word => "word",
            TokenClass::Alnum => "alnum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseMode {
    Lower,
    Upper,
    Title,
}

impl CaseMode {
    pub const ALL: [CaseMode; 3] = [CaseMode::Lower, CaseMode::Upper, CaseMode::Title];

    pub fn apply(self, s: &str) -> String {
        match self {
            CaseMode::Lower => s.to_lowercase(),
            CaseMode::Upper => s.to_uppercase(),
            CaseMode::Title => {
                let mut out = String::with_capacity(s.len());
                let mut start = true;
                for ch in s.chars() {
                    if ch.is_alphanumeric() {
                        if start {
                            out.extend(ch.to_uppercase());
                        } else {
                            out.extend(ch.to_lowercase());
                        }
                        start = false;
                    } else {
                        out.push(ch);
                        start = true;
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Expr {
    Constant { value: String },
    ColumnRef { column: String },
    Substring { column: String, token: TokenClass, index: i32 },
    SplitTake { column: String, delimiter: String, index: i32 },
    Concat { parts: Vec<Expr> },
    CaseFold { mode: CaseMode, inner: Box<Expr> },
    Strip { chars: String, inner: Box<Expr> },
}

/// Picks element `k` (negative counts from the end).
pub fn pick<T>(items: &[T], k: i32) -> Option<&T> {
    let idx = if k >= 0 { k as usize } else { items.len().checked_sub(k.unsigned_abs() as usize)? };
    items.get(idx)
}

fn lookup<'a>(row: &'a [(String, Option<String>)], column: &str) -> Option<&'a str> {
    row.iter().find(|(c, _)| c == column).and_then(|(_, v)| v.as_deref())
}

pub fn strip_chars(s: &str, chars: &str) -> String {
    s.chars().filter(|c| !chars.contains(*c)).collect()
}

impl Expr {
    pub fn constant(s: impl Into<String>) -> Expr {
        Expr::Constant { value: s.into() }
    }

    pub fn col(c: impl Into<String>) -> Expr {
        Expr::ColumnRef { column: c.into() }
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Concat { parts } => 1 + parts.iter().map(Expr::size).sum::<usize>(),
            Expr::CaseFold { inner, .. } | Expr::Strip { inner, .. } => 1 + inner.size(),
            _ => 1,
        }
    }

    pub fn eval(&self, row: &[(String, Option<String>)]) -> Option<String> {
        match self {
            Expr::Constant { value } => Some(value.clone()),
            Expr::ColumnRef { column } => lookup(row, column).map(str::to_string),
            Expr::Substring { column, token, index } => {
                let v = lookup(row, column)?;
                let toks: Vec<&str> = token.regex().find_iter(v).map(|m| m.as_str()).collect();
                pick(&toks, *index).map(|s| s.to_string())
            }
            Expr::SplitTake { column, delimiter, index } => {
                let v = lookup(row, column)?;
                let parts: Vec<&str> = v.split(delimiter.as_str()).collect();
                pick(&parts, *index).map(|s| s.to_string())
            }
            Expr::Concat { parts } => {
                let mut out = String::new();
                for p in parts {
                    out.push_str(&p.eval(row)?);
                }
                Some(out)
            }
            Expr::CaseFold { mode, inner } => inner.eval(row).map(|s| mode.apply(&s)),
            Expr::Strip { chars, inner } => inner.eval(row).map(|s| strip_chars(&s, chars)),
        }
    }

    pub fn columns(&self, out: &mut Vec<String>) {
        match self {
            Expr::Constant { .. } => {}
            Expr::ColumnRef { column } | Expr::Substring { column, .. } | Expr::SplitTake { column, .. } => {
                if !out.contains(column) {
                    out.push(column.clone());
                }
            }
            Expr::Concat { parts } => parts.iter().for_each(|p| p.columns(out)),
            Expr::CaseFold { inner, .. } | Expr::Strip { inner, .. } => inner.columns(out),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Constant { value } => write!(f, "constant({value:?})"),
            Expr::ColumnRef { column } => write!(f, "col:{column}"),
            Expr::Substring { column, token, index } => write!(f, "substring(col:{column}, {}, {index})", token.as_str()),
            Expr::SplitTake { column, delimiter, index } => write!(f, "split-take(col:{column}, {delimiter:?}, {index})"),
            Expr::Concat { parts } => {
                f.write_str("concat(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
            Expr::CaseFold { mode, inner } => write!(f, "case-fold({mode:?}, {inner})"),
            Expr::Strip { chars, inner } => write!(f, "strip({chars:?}, {inner})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FillProgram {
    pub expr: Expr,
}

impl FillProgram {
    pub fn size(&self) -> usize {
        self.expr.size()
    }

    /// One output per row; `None` where a referenced cell is missing.
    pub fn apply(&self, rows: &[InputRow]) -> Vec<Option<String>> {
        rows.iter().map(|r| self.expr.eval(r)).collect()
    }

    pub fn referenced_columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.expr.columns(&mut out);
        out
    }
}

impl fmt::Display for FillProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}
