//! `@name` references in chat text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workspace::WorkspaceState;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Rejection {
    pub token: String,
    /// Instances whose handle starts with the token, for autocomplete.
    pub candidates: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot resolve {}", .0.iter().map(|r| format!("@{}", r.token)).collect::<Vec<_>>().join(", "))]
pub struct MentionError(pub Vec<Rejection>);

fn handle_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Names an instance can be mentioned by: its id and its name with spaces
/// as underscores.
fn handles(state: &WorkspaceState) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for inst in state.instances.values() {
        out.push((inst.id().to_string(), inst.id().to_string()));
        let name = inst.name().replace(' ', "_");
        if name != inst.id() {
            out.push((name, inst.id().to_string()));
        }
    }
    out
}

/// Resolves every `@` token to an instance id, in order of appearance. A
/// token resolves to the longest handle it starts with that ends on a
/// handle boundary (so `@Table1's` finds `Table1`); a token that fits no
/// handle, or only prefixes several, is rejected with the candidates.
pub fn resolve_mentions(text: &str, state: &WorkspaceState) -> (Vec<String>, Vec<Rejection>) {
    let handles = handles(state);
    let mut mentions = Vec::new();
    let mut rejections = Vec::new();
    let mut rest = text;
    while let Some(at) = rest.find('@') {
        let after = &rest[at + 1..];
        let end = after.find(|c: char| !handle_char(c)).unwrap_or(after.len());
        let token = &after[..end];
        rest = &after[end..];
        if token.is_empty() {
            continue;
        }
        let best = handles
            .iter()
            .filter(|(h, _)| token == h || (token.starts_with(h.as_str()) && !token[h.len()..].starts_with(|c: char| c.is_alphanumeric())))
            .max_by_key(|(h, _)| h.len());
        match best {
            Some((_, id)) => {
                if !mentions.contains(id) {
                    mentions.push(id.clone());
                }
            }
            None => {
                let mut candidates: Vec<String> = handles.iter().filter(|(h, _)| h.starts_with(token)).map(|(h, _)| h.clone()).collect();
                candidates.sort();
                candidates.dedup();
                rejections.push(Rejection { token: token.to_string(), candidates });
            }
        }
    }
    (mentions, rejections)
}
