//! Page snapshots and the append-only snapshot store.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dom::Dom;
use super::ExtractError;

#[derive(Clone, Debug)]
pub struct PageSnapshot {
    pub snapshot_id: String,
    pub url: String,
    pub html: String,
    pub content_hash: String,
    pub dom: Dom,
}

/// Serialized form: the DOM is rebuilt from `html` on load.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub snapshot_id: String,
    pub url: String,
    pub content_hash: String,
    pub html: String,
}

pub fn content_hash(html: &str) -> String {
    hex::encode(Sha256::digest(html.as_bytes()))
}

pub fn snapshot_id_for(url: &str, html: &str) -> String {
    let mut h = Sha256::new();
    h.update(url.as_bytes());
    h.update([0u8]);
    h.update(html.as_bytes());
    format!("snap-{}", &hex::encode(h.finalize())[..16])
}

impl PageSnapshot {
    pub fn parse(html: &str, url: &str) -> Result<PageSnapshot, ExtractError> {
        if html.trim().is_empty() {
            return Err(ExtractError::EmptyDocument);
        }
        let dom = Dom::parse(html);
        if dom.is_empty() {
            return Err(ExtractError::EmptyDocument);
        }
        Ok(PageSnapshot {
            snapshot_id: snapshot_id_for(url, html),
            url: url.to_string(),
            html: html.to_string(),
            content_hash: content_hash(html),
            dom,
        })
    }

    pub fn record(&self) -> SnapshotRecord {
        SnapshotRecord {
            snapshot_id: self.snapshot_id.clone(),
            url: self.url.clone(),
            content_hash: self.content_hash.clone(),
            html: self.html.clone(),
        }
    }
}

/// Benchmark input manifest: html files in a directory mapped to their URLs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub pages: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub url: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Default)]
pub struct SnapshotStore {
    by_id: BTreeMap<String, Arc<PageSnapshot>>,
    latest: BTreeMap<String, String>,
    order: Vec<String>,
}

impl SnapshotStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores a snapshot. Identical html and url return the stored one; a
    /// changed document becomes the URL's latest snapshot while older ones
    /// stay addressable.
    pub fn ingest(&mut self, html: &str, url: &str) -> Result<Arc<PageSnapshot>, ExtractError> {
        let id = snapshot_id_for(url, html);
        if let Some(existing) = self.by_id.get(&id) {
            self.latest.insert(url.to_string(), id);
            return Ok(existing.clone());
        }
        let snap = Arc::new(PageSnapshot::parse(html, url)?);
        self.by_id.insert(id.clone(), snap.clone());
        self.latest.insert(url.to_string(), id.clone());
        self.order.push(id);
        Ok(snap)
    }

    pub fn get(&self, snapshot_id: &str) -> Option<&Arc<PageSnapshot>> {
        self.by_id.get(snapshot_id)
    }

    pub fn latest_for_url(&self, url: &str) -> Option<&Arc<PageSnapshot>> {
        self.latest.get(url).and_then(|id| self.by_id.get(id))
    }

    /// Looks a page up by snapshot id first, then by URL.
    pub fn resolve(&self, key: &str) -> Result<&Arc<PageSnapshot>, ExtractError> {
        self.get(key).or_else(|| self.latest_for_url(key)).ok_or_else(|| ExtractError::UnknownSnapshot(key.to_string()))
    }

    /// Snapshots in ingestion order.
    pub fn iter(&self) -> impl Iterator<Item = &Arc<PageSnapshot>> {
        self.order.iter().filter_map(|id| self.by_id.get(id))
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn urls(&self) -> Vec<String> {
        self.latest.keys().cloned().collect()
    }

    /// Ingests every page listed in `<dir>/manifest.json`.
    pub fn load_dir(&mut self, dir: &Path) -> Result<Vec<Arc<PageSnapshot>>, ExtractError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest_path).map_err(|e| ExtractError::Io(format!("{}: {e}", manifest_path.display())))?;
        let manifest: SnapshotManifest =
            serde_json::from_str(&text).map_err(|e| ExtractError::Io(format!("{}: {e}", manifest_path.display())))?;
        let mut out = Vec::new();
        for entry in &manifest.pages {
            let path = dir.join(&entry.file);
            let html = fs::read_to_string(&path).map_err(|e| ExtractError::Io(format!("{}: {e}", path.display())))?;
            out.push(self.ingest(&html, &entry.url)?);
        }
        Ok(out)
    }
}
