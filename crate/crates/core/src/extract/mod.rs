//! Snapshot ingestion, element capture, selector generalization, batch
//! extraction and source tracing.

pub mod dom;
pub mod pagegen;
pub mod selector;
pub mod snapshot;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::SourceRef;
use crate::value::CellValue;
pub use dom::{css_select, Dom, PathSeg};
pub use selector::{generalize_selection, ElementSelection, FieldPath, GeneralizedSelector, PatternSeg, SubSeg};
pub use snapshot::{PageSnapshot, SnapshotManifest, SnapshotRecord, SnapshotStore};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("unknown snapshot or page {0:?}")]
    UnknownSnapshot(String),
    #[error("node {0} does not exist in the snapshot")]
    UnknownNode(usize),
    #[error("no common pattern: {0}")]
    NoCommonPattern(String),
    #[error("exemplar from another snapshot {0:?}")]
    MixedSnapshots(String),
    #[error("selector matches nothing")]
    NoMatches,
    #[error("source is gone")]
    SourceGone,
    #[error("{0}")]
    Css(String),
    #[error("io: {0}")]
    Io(String),
}

/// Captures one node: images yield their `src` as an image reference, other
/// nodes their whitespace-collapsed text. Blank text captures as missing.
pub fn capture_element(snapshot: &PageSnapshot, node_id: usize) -> Result<(CellValue, SourceRef), ExtractError> {
    let dom = &snapshot.dom;
    if dom.node(node_id).is_none() {
        return Err(ExtractError::UnknownNode(node_id));
    }
    let value = if dom.tag(node_id) == Some("img") {
        dom.attr(node_id, "src").and_then(|s| CellValue::image_ref(s.trim())).unwrap_or(CellValue::Missing)
    } else {
        let text = dom.text_content(node_id);
        if text.is_empty() {
            CellValue::Missing
        } else {
            CellValue::Text(text)
        }
    };
    let source = SourceRef { snapshot_id: snapshot.snapshot_id.clone(), node_id, url: snapshot.url.clone() };
    Ok((value, source))
}

/// Where a source reference points now.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub snapshot_id: String,
    pub node_id: usize,
    pub url: String,
    /// Set when the page changed since capture and the node was re-found in
    /// the newer snapshot.
    pub stale: bool,
    /// Layout is not computed headlessly; the UI fills this in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highlight_rect: Option<[f64; 4]>,
}

fn signature(dom: &Dom, id: usize) -> (Option<String>, Vec<String>, String, Option<String>) {
    (dom.tag(id).map(str::to_string), dom.classes(id), dom.text_content(id), dom.attr(id, "src").map(str::to_string))
}

/// Resolves a cell's source. If the URL's latest snapshot is the captured
/// one the node is returned as is; otherwise the node is re-found in the
/// latest snapshot by path and content, flagged stale.
pub fn trace_source(store: &SnapshotStore, source: &SourceRef) -> Result<TraceResult, ExtractError> {
    let original = store.get(&source.snapshot_id).ok_or(ExtractError::SourceGone)?;
    if original.dom.node(source.node_id).is_none() {
        return Err(ExtractError::SourceGone);
    }
    let latest = store.latest_for_url(&source.url).unwrap_or(original);
    if latest.content_hash == original.content_hash {
        return Ok(TraceResult {
            snapshot_id: original.snapshot_id.clone(),
            node_id: source.node_id,
            url: source.url.clone(),
            stale: false,
            highlight_rect: None,
        });
    }
    let sig = signature(&original.dom, source.node_id);
    let found = if original.dom.tag(source.node_id).is_some() {
        latest.dom.replay_path(&original.dom.dom_path(source.node_id)).filter(|&n| signature(&latest.dom, n) == sig)
    } else {
        // Text node: re-find its parent element, then the same text child.
        let parent = original.dom.parent(source.node_id).unwrap_or(0);
        latest.dom.replay_path(&original.dom.dom_path(parent)).and_then(|p| {
            latest.dom.node(p)?.children.iter().copied().find(|&c| latest.dom.tag(c).is_none() && signature(&latest.dom, c) == sig)
        })
    };
    let found = found.or_else(|| {
        // Fall back to a unique node with the same signature anywhere.
        let mut hits = (0..latest.dom.len()).filter(|&n| signature(&latest.dom, n) == sig);
        match (hits.next(), hits.next()) {
            (Some(n), None) => Some(n),
            _ => None,
        }
    });
    match found {
        Some(node_id) => Ok(TraceResult {
            snapshot_id: latest.snapshot_id.clone(),
            node_id,
            url: source.url.clone(),
            stale: true,
            highlight_rect: None,
        }),
        None => Err(ExtractError::SourceGone),
    }
}
