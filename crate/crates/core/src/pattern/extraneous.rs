//! Extraneous-text proposals: the user deleted the same substring from two
//! cells, so offer to delete it everywhere else.

use serde::{Deserialize, Serialize};

use super::normalize::CellEditRecord;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalProposal {
    pub search_pattern: String,
    /// Cells that still contain the pattern.
    pub match_count: usize,
    pub rows: Vec<usize>,
}

/// The substring removed by an edit, when the edit is a single contiguous
/// deletion.
pub fn deleted_substring(before: &str, after: &str) -> Option<String> {
    if after.len() >= before.len() {
        return None;
    }
    let prefix = before.bytes().zip(after.bytes()).take_while(|(a, b)| a == b).count();
    let max_suffix = after.len() - prefix;
    let suffix = before.bytes().rev().zip(after.bytes().rev()).take(max_suffix).take_while(|(a, b)| a == b).count();
    if prefix + suffix != after.len() {
        return None;
    }
    let removed = before.get(prefix..before.len() - suffix)?;
    (!removed.is_empty()).then(|| removed.to_string())
}

/// Proposes removing a substring the user deleted in the two most recent
/// deletion edits of this column.
pub fn detect_extraneous(values: &[Option<String>], edits: &[CellEditRecord]) -> Option<RemovalProposal> {
    let deletions: Vec<String> = edits
        .iter()
        .filter_map(|e| deleted_substring(e.before.as_deref()?, e.after.as_deref()?))
        .collect();
    let [.., a, b] = deletions.as_slice() else { return None };
    if a != b {
        return None;
    }
    let rows: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.as_deref().is_some_and(|v| v.contains(a.as_str())))
        .map(|(r, _)| r)
        .collect();
    if rows.is_empty() {
        return None;
    }
    Some(RemovalProposal { search_pattern: a.clone(), match_count: rows.len(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edit(b: &str, a: &str) -> CellEditRecord {
        CellEditRecord { row: 0, before: Some(b.into()), after: Some(a.into()) }
    }

    #[test]
    fn deletions() {
        assert_eq!(deleted_substring("Sponsored Canon R5", "Canon R5").as_deref(), Some("Sponsored "));
        assert_eq!(deleted_substring("24.2 MP", "24.2").as_deref(), Some(" MP"));
        assert_eq!(deleted_substring("abc", "abd"), None);
        assert_eq!(deleted_substring("abc", "abc"), None);
    }

    #[test]
    fn proposal_counts_remaining_cells() {
        let mut values: Vec<Option<String>> = vec![Some("Canon R5".into()), Some("Nikon Z6".into())];
        values.extend((0..5).map(|i| Some(format!("Sponsored Cam {i}"))));
        values.push(Some("Leica Q".into()));
        let p = detect_extraneous(&values, &[edit("Sponsored Canon R5", "Canon R5"), edit("Sponsored Nikon Z6", "Nikon Z6")]).unwrap();
        assert_eq!((p.search_pattern.as_str(), p.match_count), ("Sponsored ", 5));
        assert_eq!(detect_extraneous(&values, &[edit("Sponsored Canon R5", "Canon R5"), edit("Nikon Z6 new", "Nikon Z6")]), None);
        let clean: Vec<Option<String>> = vec![Some("Canon R5".into())];
        assert_eq!(detect_extraneous(&clean, &[edit("xCanon", "Canon"), edit("xNikon", "Nikon")]), None);
    }
}
