//! Brute-force enumeration of fill programs up to size 3.
//!
//! Written against the DSL grammar only; it shares the interpreter with the
//! search but none of its candidate generation or ordering. Indexes range
//! wider than the search uses so a search that skips a reachable program
//! shows up here.

use std::collections::{BTreeSet, HashSet};

use workbench_core::pattern::{CaseMode, Example, Expr, TokenClass};

const MAX_INDEX: i32 = 8;

fn indexes() -> impl Iterator<Item = i32> {
    -MAX_INDEX..=MAX_INDEX
}

fn columns(examples: &[Example]) -> Vec<String> {
    let first: Vec<String> = examples[0].inputs.iter().map(|(c, _)| c.clone()).collect();
    first.into_iter().filter(|c| examples.iter().all(|e| e.inputs.iter().any(|(k, v)| k == c && v.is_some()))).collect()
}

fn value_vector(expr: &Expr, examples: &[Example]) -> Option<Vec<String>> {
    examples.iter().map(|e| expr.eval(&e.inputs)).collect()
}

/// Every distinct output vector of a non-constant leaf.
fn leaves(examples: &[Example]) -> Vec<Vec<String>> {
    let mut out = BTreeSet::new();
    for col in columns(examples) {
        let mut exprs = vec![Expr::col(col.clone())];
        let mut delims = BTreeSet::new();
        for e in examples {
            if let Some((_, Some(v))) = e.inputs.iter().find(|(c, _)| *c == col) {
                delims.extend(v.chars().filter(|ch| !ch.is_alphanumeric()));
            }
        }
        for k in indexes() {
            for token in TokenClass::ALL {
                exprs.push(Expr::Substring { column: col.clone(), token, index: k });
            }
            for d in &delims {
                exprs.push(Expr::SplitTake { column: col.clone(), delimiter: d.to_string(), index: k });
            }
        }
        for e in exprs {
            if let Some(v) = value_vector(&e, examples) {
                out.insert(v);
            }
        }
    }
    out.into_iter().collect()
}

fn strip_fits(values: &[String], outputs: &[&str]) -> bool {
    let keep: BTreeSet<char> = outputs.iter().flat_map(|o| o.chars()).collect();
    let drop: BTreeSet<char> = values.iter().flat_map(|v| v.chars()).filter(|c| !keep.contains(c)).collect();
    !drop.is_empty()
        && values.iter().zip(outputs).all(|(v, o)| v.chars().filter(|c| !drop.contains(c)).collect::<String>() == *o)
}

fn folded(values: &[String], mode: CaseMode) -> Vec<String> {
    values.iter().map(|v| mode.apply(v)).collect()
}

/// Size of the smallest program consistent with every example, if it is 3
/// or less.
pub fn smallest_size_up_to_3(examples: &[Example]) -> Option<usize> {
    let outputs: Vec<&str> = examples.iter().map(|e| e.output.as_str()).collect();
    let target: Vec<String> = outputs.iter().map(|s| s.to_string()).collect();
    let leaves = leaves(examples);

    let all_equal = outputs.iter().all(|o| *o == outputs[0]);
    if all_equal || leaves.contains(&target) {
        return Some(1);
    }

    for l in &leaves {
        if CaseMode::ALL.iter().any(|m| folded(l, *m) == target) || strip_fits(l, &outputs) {
            return Some(2);
        }
    }

    for l in &leaves {
        if CaseMode::ALL.iter().any(|m| strip_fits(&folded(l, *m), &outputs)) {
            return Some(3);
        }
    }
    let leaf_set: HashSet<&Vec<String>> = leaves.iter().collect();
    // concat(leaf, leaf | constant)
    for l in &leaves {
        let rest: Option<Vec<String>> = outputs.iter().zip(l).map(|(o, v)| o.strip_prefix(v.as_str()).map(str::to_string)).collect();
        if let Some(rest) = rest {
            if rest.iter().all(|r| *r == rest[0]) || leaf_set.contains(&rest) {
                return Some(3);
            }
        }
    }
    // concat(constant, leaf)
    let first = outputs[0];
    for (i, _) in first.char_indices().skip(1).chain(std::iter::once((first.len(), ' '))) {
        let prefix = &first[..i];
        let rest: Option<Vec<String>> = outputs.iter().map(|o| o.strip_prefix(prefix).map(str::to_string)).collect();
        if let Some(rest) = rest {
            if leaf_set.contains(&rest) {
                return Some(3);
            }
        }
    }
    None
}
