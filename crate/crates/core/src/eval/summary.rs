//! Per difficulty and guidance type: how much guidance a run produced, how
//! fast, and how accurate it was according to human labels.
//!
//! A labels file is JSON:
//!
//! ```text
//! {"labels": [{"task": "camera-scenario", "entry": 3, "labeler": "a", "label": "correct"}, ...]}
//! ```
//!
//! `entry` indexes the run report's `entries`. Labels are `correct`,
//! `incorrect` or `not-sure`. An item anyone marked not sure is left out;
//! an item the labelers disagree on counts half.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::replay::{GuidanceType, RunReport};
use super::task::Difficulty;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Correct,
    Incorrect,
    NotSure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub task: String,
    pub entry: usize,
    pub labeler: String,
    pub label: Label,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelFile {
    pub labels: Vec<LabelRecord>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SummaryError {
    #[error("no run reports to summarize")]
    NoReports,
    #[error("label for {task} entry {entry}: no such guidance entry")]
    UnknownEntry { task: String, entry: usize },
}

/// Credit for one item from all its labels; `None` when it is excluded
/// or unlabeled.
pub fn item_credit(labels: &[Label]) -> Option<f64> {
    if labels.is_empty() || labels.contains(&Label::NotSure) {
        return None;
    }
    let correct = labels.iter().filter(|l| **l == Label::Correct).count();
    Some(if correct == labels.len() {
        1.0
    } else if correct == 0 {
        0.0
    } else {
        0.5
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryRow {
    pub difficulty: Difficulty,
    pub guidance_type: GuidanceType,
    pub runs: usize,
    pub suggestions: usize,
    pub mean_count: f64,
    pub mean_latency_ms: Option<f64>,
    pub labeled: usize,
    pub excluded: usize,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub labeled: usize,
    pub excluded: usize,
    pub accuracy: Option<f64>,
}

impl Summary {
    /// Plain-text table, one row per difficulty and guidance type.
    pub fn to_table(&self) -> String {
        let pct = |a: Option<f64>| a.map_or("-".to_string(), |a| format!("{:.1}%", a * 100.0));
        let mut out = format!("{:<8} {:<11} {:>4} {:>10} {:>12} {:>8} {:>9}\n", "level", "guidance", "runs", "mean count", "latency ms", "labeled", "accuracy");
        for r in &self.rows {
            let lat = r.mean_latency_ms.map_or("-".to_string(), |l| format!("{l:.2}"));
            let _ = writeln!(
                out,
                "{:<8} {:<11} {:>4} {:>10.2} {:>12} {:>8} {:>9}",
                r.difficulty.as_str(),
                r.guidance_type.as_str(),
                r.runs,
                r.mean_count,
                lat,
                r.labeled,
                pct(r.accuracy)
            );
        }
        let _ = writeln!(out, "overall accuracy {} over {} labeled items ({} excluded)", pct(self.accuracy), self.labeled, self.excluded);
        out
    }
}

pub fn summarize_runs(reports: &[RunReport], labels: &[LabelRecord]) -> Result<Summary, SummaryError> {
    if reports.is_empty() {
        return Err(SummaryError::NoReports);
    }
    let mut per_item: BTreeMap<(&str, usize), Vec<Label>> = BTreeMap::new();
    for l in labels {
        let known = reports.iter().any(|r| r.task_id == l.task && l.entry < r.entries.len());
        if !known {
            return Err(SummaryError::UnknownEntry { task: l.task.clone(), entry: l.entry });
        }
        per_item.entry((l.task.as_str(), l.entry)).or_default().push(l.label);
    }

    let mut rows = Vec::new();
    let (mut all_credit, mut all_labeled, mut all_excluded) = (0.0, 0, 0);
    for d in Difficulty::ALL {
        let runs: Vec<&RunReport> = reports.iter().filter(|r| r.difficulty == d).collect();
        if runs.is_empty() {
            continue;
        }
        for g in GuidanceType::ALL {
            let (mut n, mut latency, mut credit, mut labeled, mut excluded) = (0, 0.0, 0.0, 0, 0);
            for r in &runs {
                for (i, e) in r.entries.iter().enumerate().filter(|(_, e)| e.guidance_type == g) {
                    n += 1;
                    latency += e.latency_ms;
                    match per_item.get(&(r.task_id.as_str(), i)) {
                        None => {}
                        Some(ls) => match item_credit(ls) {
                            Some(c) => {
                                credit += c;
                                labeled += 1;
                            }
                            None => excluded += 1,
                        },
                    }
                }
            }
            all_credit += credit;
            all_labeled += labeled;
            all_excluded += excluded;
            rows.push(SummaryRow {
                difficulty: d,
                guidance_type: g,
                runs: runs.len(),
                suggestions: n,
                mean_count: n as f64 / runs.len() as f64,
                mean_latency_ms: (n > 0).then(|| latency / n as f64),
                labeled,
                excluded,
                accuracy: (labeled > 0).then(|| credit / labeled as f64),
            });
        }
    }
    Ok(Summary { rows, labeled: all_labeled, excluded: all_excluded, accuracy: (all_labeled > 0).then(|| all_credit / all_labeled as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn credit_rules() {
        use Label::*;
        assert_eq!(item_credit(&[Correct, Correct]), Some(1.0));
        assert_eq!(item_credit(&[Incorrect, Incorrect]), Some(0.0));
        assert_eq!(item_credit(&[Correct, Incorrect]), Some(0.5));
        assert_eq!(item_credit(&[Correct, NotSure]), None);
        assert_eq!(item_credit(&[]), None);
    }
}
