//! Benchmark tasks and their difficulty.
//!
//! A task file is JSON:
//!
//! ```text
//! {
//!   "id": "camera-scenario",
//!   "statement": "Compare cameras from two shops ...",
//!   "snapshotFiles": [{"file": "../pages/amazon.html", "url": "https://..."}],
//!   "criteria": {"multiPage": true, "transformOpsGt5": true, "needsViz": true},
//!   "driver": [{"action": "workspace", "title": "Buying a camera"}, ...],
//!   "fixtures": [{"intent": "chat:...", "plan": [...]}]
//! }
//! ```
//!
//! Snapshot paths are relative to the task file. The benchmark manifest
//! lists task files with their authored difficulty.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use scraper::{ElementRef, Html};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::driver::DriverStep;
use crate::extract::snapshot::{ManifestEntry, PageSnapshot};
use crate::extract::SnapshotStore;
use crate::llm::Fixture;

pub const MIN_RECORDS: usize = 10;
pub const MAX_RECORDS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("io: {0}")]
    Io(String),
    #[error("bad task file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("snapshot file {0} does not exist")]
    MissingSnapshot(String),
    #[error("{file} holds {count} records; tasks need {MIN_RECORDS} to {MAX_RECORDS}")]
    RecordCount { file: String, count: usize },
    #[error("snapshot {file}: {message}")]
    Snapshot { file: String, message: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Criteria {
    pub multi_page: bool,
    pub transform_ops_gt_5: bool,
    pub needs_viz: bool,
}

impl Criteria {
    pub fn count(self) -> usize {
        [self.multi_page, self.transform_ops_gt_5, self.needs_viz].iter().filter(|b| **b).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl std::fmt::Display for Difficulty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// No criteria met is easy, one or two medium, all three hard.
pub fn classify(criteria: Criteria) -> Difficulty {
    match criteria.count() {
        0 => Difficulty::Easy,
        1 | 2 => Difficulty::Medium,
        _ => Difficulty::Hard,
    }
}

pub fn classify_difficulty(task: &BenchmarkTask) -> Difficulty {
    classify(task.criteria)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BenchmarkTask {
    pub id: String,
    pub statement: String,
    pub snapshot_files: Vec<ManifestEntry>,
    pub criteria: Criteria,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub driver: Vec<DriverStep>,
    /// Scripted provider replies used when the task is replayed offline.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixtures: Vec<Fixture>,
}

/// A task with its pages read and checked.
#[derive(Clone, Debug)]
pub struct LoadedTask {
    pub task: BenchmarkTask,
    pub path: PathBuf,
    pub pages: Vec<LoadedPage>,
}

#[derive(Clone, Debug)]
pub struct LoadedPage {
    pub file: String,
    pub url: String,
    pub html: String,
    pub records: usize,
}

impl LoadedTask {
    pub fn difficulty(&self) -> Difficulty {
        classify_difficulty(&self.task)
    }

    /// Ingests the task's pages in file order.
    pub fn snapshots(&self) -> Result<(SnapshotStore, Vec<Arc<PageSnapshot>>), TaskError> {
        let mut store = SnapshotStore::new();
        let mut snaps = Vec::new();
        for p in &self.pages {
            snaps.push(store.ingest(&p.html, &p.url).map_err(|e| TaskError::Snapshot { file: p.file.clone(), message: e.to_string() })?);
        }
        Ok((store, snaps))
    }
}

/// Size of the largest run of sibling elements sharing tag and class list
/// and carrying text: the record list of a results page.
pub fn estimate_record_count(html: &str) -> usize {
    let doc = Html::parse_document(html);
    let mut best = 0;
    for node in doc.root_element().descendants() {
        let Some(el) = ElementRef::wrap(node) else { continue };
        let mut groups: std::collections::HashMap<(String, String), usize> = std::collections::HashMap::new();
        for child in el.children().filter_map(ElementRef::wrap) {
            if child.text().all(|t| t.trim().is_empty()) {
                continue;
            }
            let v = child.value();
            let class = v.attr("class").unwrap_or_default().split_whitespace().collect::<Vec<_>>().join(" ");
            *groups.entry((v.name().to_string(), class)).or_default() += 1;
        }
        best = best.max(groups.values().copied().max().unwrap_or(0));
    }
    best
}

pub fn parse_task(text: &str, path: &Path) -> Result<BenchmarkTask, TaskError> {
    serde_json::from_str(text).map_err(|e| TaskError::Parse { path: path.display().to_string(), message: e.to_string() })
}

/// Reads a task file and validates its pages: each must exist and hold
/// between 10 and 40 records.
pub fn load_task(path: &Path) -> Result<LoadedTask, TaskError> {
    let text = std::fs::read_to_string(path).map_err(|e| TaskError::Io(format!("{}: {e}", path.display())))?;
    let task = parse_task(&text, path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut pages = Vec::new();
    for entry in &task.snapshot_files {
        let file = dir.join(&entry.file);
        if !file.is_file() {
            return Err(TaskError::MissingSnapshot(file.display().to_string()));
        }
        let html = std::fs::read_to_string(&file).map_err(|e| TaskError::Io(format!("{}: {e}", file.display())))?;
        let records = estimate_record_count(&html);
        if !(MIN_RECORDS..=MAX_RECORDS).contains(&records) {
            return Err(TaskError::RecordCount { file: entry.file.clone(), count: records });
        }
        pages.push(LoadedPage { file: entry.file.clone(), url: entry.url.clone(), html, records });
    }
    Ok(LoadedTask { task, path: path.to_path_buf(), pages })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ManifestTask {
    pub id: String,
    pub file: String,
    /// The label the task was authored for.
    pub difficulty: Difficulty,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub tasks: Vec<ManifestTask>,
}

pub const BENCHMARK_MANIFEST: &str = "benchmark.json";

impl BenchmarkManifest {
    pub fn load(dir: &Path) -> Result<Self, TaskError> {
        let path = dir.join(BENCHMARK_MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| TaskError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| TaskError::Parse { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn task_paths(&self, dir: &Path) -> Vec<PathBuf> {
        self.tasks.iter().map(|t| dir.join(&t.file)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::pagegen::{generate_list_page, SiteStyle};

    #[test]
    fn the_eight_flag_combinations() {
        for bits in 0..8u8 {
            let c = Criteria { multi_page: bits & 1 != 0, transform_ops_gt_5: bits & 2 != 0, needs_viz: bits & 4 != 0 };
            let want = match bits.count_ones() {
                0 => Difficulty::Easy,
                3 => Difficulty::Hard,
                _ => Difficulty::Medium,
            };
            assert_eq!(classify(c), want, "{c:?}");
        }
    }

    #[test]
    fn record_count_ignores_navigation_and_ads() {
        for (style, n) in [(SiteStyle::Generic, 10), (SiteStyle::AmazonLike, 23), (SiteStyle::EbayLike, 40)] {
            let p = generate_list_page(n as u64, n, style, "https://x.example/", true);
            assert_eq!(estimate_record_count(&p.html), n, "{style:?}");
        }
    }
}
