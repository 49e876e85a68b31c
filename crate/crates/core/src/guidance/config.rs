use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rules::RuleId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct GuidanceConfig {
    /// Quiet time after the last major event before macro suggestions run.
    pub idle_threshold_ms: u64,
    /// Interaction events kept in the model context.
    pub context_event_cap: usize,
    /// Autocomplete rows proposed at once.
    pub ghost_rows: usize,
    /// Per-rule overrides of the default confidence.
    pub confidence: BTreeMap<RuleId, f64>,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            idle_threshold_ms: 5000,
            context_event_cap: 15,
            ghost_rows: 5,
            confidence: RuleId::ALL.iter().map(|r| (*r, r.default_confidence())).collect(),
        }
    }
}

impl GuidanceConfig {
    pub fn confidence_for(&self, rule: RuleId) -> f64 {
        self.confidence.get(&rule).copied().unwrap_or_else(|| rule.default_confidence())
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
