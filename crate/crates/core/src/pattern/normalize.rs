//! Entity-resolution proposals: variant spellings of one entity within a
//! text column, unified after the user has started doing it by hand.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A cell edit the user just made.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellEditRecord {
    pub row: usize,
    pub before: Option<String>,
    pub after: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellChange {
    pub row: usize,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationProposal {
    /// Canonical form per cluster, keyed by the cluster's first-seen variant.
    pub canonical: BTreeMap<String, String>,
    pub changes: Vec<CellChange>,
}

/// Case-folded value with everything but letters and digits removed.
pub fn cluster_key(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

struct Forms {
    names: Vec<String>,
    parent: Vec<usize>,
}

impl Forms {
    fn id(&mut self, s: &str) -> usize {
        match self.names.iter().position(|n| n == s) {
            Some(i) => i,
            None => {
                self.names.push(s.to_string());
                self.parent.push(self.parent.len());
                self.parent.len() - 1
            }
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Proposes unifying every variant cluster once the user has made at least
/// two edits toward consistency. Values sharing a non-empty [`cluster_key`]
/// form a cluster, and each edit also links its old value to its new one.
/// A cluster's canonical form is the user's most recent edit result inside
/// it, else its most frequent form (earliest on ties).
pub fn detect_normalization(values: &[Option<String>], edits: &[CellEditRecord]) -> Option<NormalizationProposal> {
    let toward: Vec<&CellEditRecord> = edits
        .iter()
        .filter(|e| match (&e.before, &e.after) {
            (Some(b), Some(a)) => b != a && values.iter().enumerate().any(|(r, v)| r != e.row && v.as_deref() == Some(a.as_str())),
            _ => false,
        })
        .collect();
    if toward.len() < 2 {
        return None;
    }

    let mut forms = Forms { names: Vec::new(), parent: Vec::new() };
    let mut by_key: BTreeMap<String, usize> = BTreeMap::new();
    for v in values.iter().flatten() {
        let id = forms.id(v);
        let key = cluster_key(v);
        if key.is_empty() {
            continue;
        }
        match by_key.get(&key) {
            Some(&other) => forms.union(id, other),
            None => {
                by_key.insert(key, id);
            }
        }
    }
    for e in &toward {
        let (b, a) = (e.before.as_deref().unwrap_or_default(), e.after.as_deref().unwrap_or_default());
        let (ib, ia) = (forms.id(b), forms.id(a));
        if let Some(&k) = by_key.get(&cluster_key(b)) {
            forms.union(ib, k);
        }
        forms.union(ib, ia);
    }

    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in values.iter().flatten() {
        let id = forms.id(v);
        *counts.entry(id).or_default() += 1;
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for id in counts.keys().copied().collect::<Vec<_>>() {
        let root = forms.find(id);
        members.entry(root).or_default().push(id);
    }

    let mut canonical = BTreeMap::new();
    let mut target_of: BTreeMap<usize, String> = BTreeMap::new();
    for (root, ids) in &members {
        if ids.len() < 2 {
            continue;
        }
        let recent = toward.iter().rev().filter_map(|e| e.after.as_deref()).find(|a| {
            let id = forms.names.iter().position(|n| n == a);
            id.is_some_and(|i| forms.find(i) == *root)
        });
        let canon = match recent {
            Some(a) => a.to_string(),
            None => {
                let best = ids.iter().max_by(|a, b| counts[a].cmp(&counts[b]).then(b.cmp(a))).expect("non-empty cluster");
                forms.names[*best].clone()
            }
        };
        canonical.insert(forms.names[ids[0]].clone(), canon.clone());
        for &id in ids {
            target_of.insert(id, canon.clone());
        }
    }

    let changes: Vec<CellChange> = values
        .iter()
        .enumerate()
        .filter_map(|(row, v)| {
            let v = v.as_ref()?;
            let id = forms.names.iter().position(|n| n == v)?;
            let to = target_of.get(&id)?;
            (to != v).then(|| CellChange { row, from: v.clone(), to: to.clone() })
        })
        .collect();
    if changes.is_empty() {
        None
    } else {
        Some(NormalizationProposal { canonical, changes })
    }
}
