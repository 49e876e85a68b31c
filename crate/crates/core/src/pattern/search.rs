//! Minimal fill-program search.
//!
//! Programs are tried in increasing size. Among programs of one size the
//! winner is the first in this order: compare the pre-order sequence of
//! primitives, ranked constant < column-ref < substring < split-take <
//! concat < case-fold < strip, then the parameters (column position in the
//! input row, token class, index with non-negative indexes first, literal
//! strings lexicographically). The encoding is prefix-free, so comparing
//! concat parts one by one gives the same order as comparing whole programs.
//!
//! Literals come from the examples: constants are substrings of outputs,
//! delimiters are non-alphanumeric characters of the inputs, and strip sets
//! are deduced from the characters an input has and the output lacks.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::program::{strip_chars, CaseMode, Expr, FillProgram, InputRow, TokenClass, MAX_PROGRAM_SIZE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub inputs: InputRow,
    pub output: String,
}

impl Example {
    pub fn new(inputs: &[(&str, &str)], output: &str) -> Self {
        Self { inputs: inputs.iter().map(|(c, v)| (c.to_string(), Some(v.to_string()))).collect(), output: output.to_string() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("need at least two examples, got {0}")]
    NotEnoughExamples(usize),
    #[error("identical inputs map to different outputs")]
    ConflictingExamples,
    #[error("no program of size {MAX_PROGRAM_SIZE} or less fits the examples")]
    NoProgram,
}

const CONSTANT: u8 = 0;
const COLUMN: u8 = 1;
const SUBSTRING: u8 = 2;
const SPLIT: u8 = 3;
const CASE: u8 = 5;
const STRIP: u8 = 6;

pub const INDEXES: [i32; 5] = [0, 1, 2, -1, -2];
pub const SPLIT_INDEXES: [i32; 6] = [0, 1, 2, 3, -1, -2];

type Key = Vec<(u8, String)>;

fn index_key(k: i32) -> String {
    if k >= 0 {
        format!("0{k:03}")
    } else {
        format!("1{:03}", -k)
    }
}

#[derive(Clone, Debug)]
struct Cand {
    expr: Expr,
    key: Key,
    size: usize,
    values: Vec<String>,
}

struct Searcher<'a> {
    outputs: Vec<&'a str>,
    leaves: Vec<Cand>,
    folds: Vec<Cand>,
    dead: HashSet<(Vec<usize>, usize, bool)>,
}

fn eval_all(expr: &Expr, examples: &[Example]) -> Option<Vec<String>> {
    examples.iter().map(|e| expr.eval(&e.inputs)).collect()
}

/// Keeps the first candidate of each distinct value vector.
fn sort_dedupe(mut cands: Vec<Cand>) -> Vec<Cand> {
    cands.sort_by(|a, b| a.key.cmp(&b.key));
    let mut seen = HashSet::new();
    cands.retain(|c| seen.insert(c.values.clone()));
    cands
}

fn char_set(s: &str) -> BTreeSet<char> {
    s.chars().collect()
}

/// Smallest strip set turning each value into its target, if one exists.
fn deduce_strip(values: &[&str], targets: &[&str]) -> Option<String> {
    let mut set = BTreeSet::new();
    for (v, t) in values.iter().zip(targets) {
        let keep = char_set(t);
        set.extend(v.chars().filter(|c| !keep.contains(c)));
    }
    let chars: String = set.into_iter().collect();
    if chars.is_empty() || values.iter().zip(targets).any(|(v, t)| strip_chars(v, &chars) != *t) {
        return None;
    }
    Some(chars)
}

/// Columns present in every example, in the first example's order.
pub fn shared_columns(examples: &[Example]) -> Vec<String> {
    examples[0]
        .inputs
        .iter()
        .map(|(c, _)| c.clone())
        .filter(|c| examples.iter().all(|e| e.inputs.iter().any(|(k, _)| k == c)))
        .collect()
}

/// Split delimiters for a column: its non-alphanumeric characters.
pub fn delimiters(examples: &[Example], column: &str) -> Vec<String> {
    let mut set = BTreeSet::new();
    for e in examples {
        if let Some((_, Some(v))) = e.inputs.iter().find(|(c, _)| c == column) {
            set.extend(v.chars().filter(|c| !c.is_alphanumeric()));
        }
    }
    set.into_iter().map(String::from).collect()
}

fn build_leaves(examples: &[Example]) -> Vec<Cand> {
    let mut out = Vec::new();
    let mut push = |expr: Expr, key: Key| {
        if let Some(values) = eval_all(&expr, examples) {
            out.push(Cand { expr, key, size: 1, values });
        }
    };
    for (ci, col) in shared_columns(examples).iter().enumerate() {
        let cp = format!("{ci:04}");
        push(Expr::col(col.clone()), vec![(COLUMN, cp.clone())]);
        for token in TokenClass::ALL {
            for index in INDEXES {
                push(
                    Expr::Substring { column: col.clone(), token, index },
                    vec![(SUBSTRING, format!("{cp}|{}|{}", token as u8, index_key(index)))],
                );
            }
        }
        for delimiter in delimiters(examples, col) {
            for index in SPLIT_INDEXES {
                push(
                    Expr::SplitTake { column: col.clone(), delimiter: delimiter.clone(), index },
                    vec![(SPLIT, format!("{cp}|{delimiter}|{}", index_key(index)))],
                );
            }
        }
    }
    sort_dedupe(out)
}

fn build_folds(leaves: &[Cand]) -> Vec<Cand> {
    let mut out = Vec::new();
    for mode in CaseMode::ALL {
        for leaf in leaves {
            let mut key = vec![(CASE, (mode as u8).to_string())];
            key.extend(leaf.key.iter().cloned());
            out.push(Cand {
                expr: Expr::CaseFold { mode, inner: Box::new(leaf.expr.clone()) },
                key,
                size: 2,
                values: leaf.values.iter().map(|v| mode.apply(v)).collect(),
            });
        }
    }
    sort_dedupe(out)
}

fn strip_of(inner: &Cand, chars: String) -> Cand {
    let mut key = vec![(STRIP, chars.clone())];
    key.extend(inner.key.iter().cloned());
    Cand {
        values: inner.values.iter().map(|v| strip_chars(v, &chars)).collect(),
        expr: Expr::Strip { chars, inner: Box::new(inner.expr.clone()) },
        key,
        size: inner.size + 1,
    }
}

impl<'a> Searcher<'a> {
    fn whole(&self, cands: &[Cand]) -> Option<Expr> {
        cands.iter().find(|c| c.values.iter().zip(&self.outputs).all(|(v, o)| v == o)).map(|c| c.expr.clone())
    }

    fn whole_strip(&self, inners: &[Cand]) -> Option<Expr> {
        inners
            .iter()
            .filter_map(|inner| {
                let values: Vec<&str> = inner.values.iter().map(String::as_str).collect();
                deduce_strip(&values, &self.outputs).map(|s| strip_of(inner, s))
            })
            .min_by(|a, b| a.key.cmp(&b.key))
            .map(|c| c.expr)
    }

    fn search_size(&mut self, size: usize) -> Option<Expr> {
        match size {
            1 => {
                if self.outputs.iter().all(|o| *o == self.outputs[0]) {
                    return Some(Expr::constant(self.outputs[0]));
                }
                self.whole(&self.leaves)
            }
            2 => self.whole(&self.folds).or_else(|| self.whole_strip(&self.leaves)),
            _ => {
                let mut parts = Vec::new();
                let mut pos = vec![0; self.outputs.len()];
                if self.concat(&mut pos, size - 1, &mut parts) {
                    return Some(Expr::Concat { parts });
                }
                if size == 3 {
                    let folds = self.folds.clone();
                    return self.whole_strip(&folds);
                }
                None
            }
        }
    }

    fn fits(&self, pos: &[usize], values: &[String]) -> bool {
        values.iter().any(|v| !v.is_empty())
            && values.iter().zip(&self.outputs).zip(pos).all(|((v, o), &p)| o[p..].starts_with(v.as_str()))
    }

    /// Candidate parts at the current positions, sorted by key.
    fn candidates(&self, pos: &[usize], budget: usize) -> Vec<Cand> {
        let mut out = Vec::new();
        let rest0 = &self.outputs[0][pos[0]..];
        let ends: Vec<usize> = rest0.char_indices().map(|(i, c)| i + c.len_utf8()).collect();
        for &q in &ends {
            let c = &rest0[..q];
            if self.outputs.iter().zip(pos).all(|(o, &p)| o[p..].starts_with(c)) {
                out.push(Cand { expr: Expr::constant(c), key: vec![(CONSTANT, c.to_string())], size: 1, values: vec![c.to_string(); pos.len()] });
            }
        }
        out.extend(self.leaves.iter().filter(|c| self.fits(pos, &c.values)).cloned());
        if budget >= 2 {
            out.extend(self.folds.iter().filter(|c| self.fits(pos, &c.values)).cloned());
        }
        let inners: Vec<&Cand> = self.leaves.iter().chain(self.folds.iter()).filter(|c| c.size < budget).collect();
        let mut seen = HashSet::new();
        for inner in inners {
            let all_chars: BTreeSet<char> = inner.values.iter().flat_map(|v| v.chars()).collect();
            for &q in &ends {
                let seg = &rest0[..q];
                let keep = char_set(seg);
                let minimal: String = inner.values[0].chars().filter(|c| !keep.contains(c)).collect::<BTreeSet<_>>().into_iter().collect();
                let maximal: String = all_chars.iter().filter(|c| !keep.contains(c)).collect();
                for chars in [minimal, maximal] {
                    if chars.is_empty() || strip_chars(&inner.values[0], &chars) != seg || !seen.insert((inner.key.clone(), chars.clone())) {
                        continue;
                    }
                    let cand = strip_of(inner, chars);
                    if self.fits(pos, &cand.values) {
                        out.push(cand);
                    }
                }
            }
        }
        out.retain(|c| c.size <= budget);
        out.sort_by(|a, b| a.key.cmp(&b.key));
        out
    }

    fn concat(&mut self, pos: &mut Vec<usize>, budget: usize, parts: &mut Vec<Expr>) -> bool {
        let done = pos.iter().zip(&self.outputs).all(|(&p, o)| p == o.len());
        if done {
            return budget == 0 && parts.len() >= 2;
        }
        if budget == 0 {
            return false;
        }
        let state = (pos.clone(), budget, parts.len() >= 2);
        if self.dead.contains(&state) {
            return false;
        }
        for cand in self.candidates(pos, budget) {
            let saved = pos.clone();
            for (p, v) in pos.iter_mut().zip(&cand.values) {
                *p += v.len();
            }
            parts.push(cand.expr.clone());
            if self.concat(pos, budget - cand.size, parts) {
                return true;
            }
            parts.pop();
            *pos = saved;
        }
        self.dead.insert(state);
        false
    }
}

fn check_examples(examples: &[Example]) -> Result<(), PatternError> {
    if examples.len() < 2 {
        return Err(PatternError::NotEnoughExamples(examples.len()));
    }
    for (i, a) in examples.iter().enumerate() {
        for b in &examples[i + 1..] {
            if a.inputs == b.inputs && a.output != b.output {
                return Err(PatternError::ConflictingExamples);
            }
        }
    }
    Ok(())
}

/// Infers the smallest program reproducing every example.
pub fn infer_fill_program(examples: &[Example]) -> Result<FillProgram, PatternError> {
    check_examples(examples)?;
    let leaves = build_leaves(examples);
    let folds = build_folds(&leaves);
    let mut s = Searcher { outputs: examples.iter().map(|e| e.output.as_str()).collect(), leaves, folds, dead: HashSet::new() };
    for size in 1..=MAX_PROGRAM_SIZE {
        if let Some(expr) = s.search_size(size) {
            let program = FillProgram { expr };
            debug_assert!(examples.iter().all(|e| program.expr.eval(&e.inputs).as_deref() == Some(e.output.as_str())));
            return Ok(program);
        }
    }
    Err(PatternError::NoProgram)
}
