//! The fifteen trigger rules. Each one is a pure predicate over the
//! workspace state and the major-event history, and yields bindings that
//! the plan templates turn into tool calls.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::events::{EventKind, InteractionEvent};
use crate::extract::selector::{generalize_selection, union_containers, ElementSelection};
use crate::extract::snapshot::SnapshotStore;
use crate::pattern::{detect_extraneous, detect_normalization, infer_fill_program, CellChange, CellEditRecord, Example};
use crate::table::{is_default_column_name, Column, TableInstance};
use crate::transform::filter::{BoolOp, Comparator, FilterCondition};
use crate::transform::format::{canonical_currency, detect_currency};
use crate::transform::formula::parse_formula;
use crate::transform::merge::MergeStrategy;
use crate::transform::sort::SortOrder;
use crate::transform::tools::RULE_TARGET;
use crate::transform::{Tool, ToolCall};
use crate::value::{parse_number, ValueType};
use crate::viz::{Channel, ChartType};
use crate::workspace::WorkspaceState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    WebpageSuggestion,
    ElementSelection,
    SchemaInference,
    BatchExtraction,
    Autocomplete,
    ComputedColumns,
    SortingFilteringRule,
    JoiningTables,
    EntityResolution,
    RemoveExtraneous,
    FillMissing,
    TypeCorrection,
    AutoViz,
    AlternativeChart,
    InteractiveFilter,
    /// Not one of the table-2 rules: a chart lost an encoded column.
    ChartRepair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Micro,
    Macro,
}

impl RuleId {
    pub const ALL: [RuleId; 16] = [
        RuleId::WebpageSuggestion,
        RuleId::ElementSelection,
        RuleId::SchemaInference,
        RuleId::BatchExtraction,
        RuleId::Autocomplete,
        RuleId::ComputedColumns,
        RuleId::SortingFilteringRule,
        RuleId::JoiningTables,
        RuleId::EntityResolution,
        RuleId::RemoveExtraneous,
        RuleId::FillMissing,
        RuleId::TypeCorrection,
        RuleId::AutoViz,
        RuleId::AlternativeChart,
        RuleId::InteractiveFilter,
        RuleId::ChartRepair,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::WebpageSuggestion => "webpage-suggestion",
            RuleId::ElementSelection => "element-selection",
            RuleId::SchemaInference => "schema-inference",
            RuleId::BatchExtraction => "batch-extraction",
            RuleId::Autocomplete => "autocomplete",
            RuleId::ComputedColumns => "computed-columns",
            RuleId::SortingFilteringRule => "sorting-filtering-rule",
            RuleId::JoiningTables => "joining-tables",
            RuleId::EntityResolution => "entity-resolution",
            RuleId::RemoveExtraneous => "remove-extraneous",
            RuleId::FillMissing => "fill-missing",
            RuleId::TypeCorrection => "type-correction",
            RuleId::AutoViz => "auto-viz",
            RuleId::AlternativeChart => "alternative-chart",
            RuleId::InteractiveFilter => "interactive-filter",
            RuleId::ChartRepair => "chart-repair",
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.as_str() == s)
    }

    pub fn scopes(self) -> &'static [Scope] {
        match self {
            RuleId::ElementSelection | RuleId::ComputedColumns | RuleId::FillMissing => &[Scope::Micro, Scope::Macro],
            RuleId::SchemaInference
            | RuleId::BatchExtraction
            | RuleId::Autocomplete
            | RuleId::EntityResolution
            | RuleId::RemoveExtraneous
            | RuleId::TypeCorrection
            | RuleId::ChartRepair => &[Scope::Micro],
            _ => &[Scope::Macro],
        }
    }

    pub fn default_confidence(self) -> f64 {
        match self {
            RuleId::WebpageSuggestion => 0.6,
            RuleId::ElementSelection => 0.7,
            RuleId::SchemaInference => 0.6,
            RuleId::BatchExtraction => 0.85,
            RuleId::Autocomplete => 0.9,
            RuleId::ComputedColumns => 0.5,
            RuleId::SortingFilteringRule => 0.3,
            RuleId::JoiningTables => 0.8,
            RuleId::EntityResolution => 0.75,
            RuleId::RemoveExtraneous => 0.8,
            RuleId::FillMissing => 0.55,
            RuleId::TypeCorrection => 0.7,
            RuleId::AutoViz => 0.5,
            RuleId::AlternativeChart => 0.4,
            RuleId::InteractiveFilter => 0.35,
            RuleId::ChartRepair => 0.8,
        }
    }
}

impl std::fmt::Display for RuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a rule matched, with enough detail to build its plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "binding", rename_all = "kebab-case")]
pub enum Binding {
    Pages { title: String, urls: Vec<String> },
    Elements { page: String, exemplars: Vec<usize>, matched: Vec<usize> },
    Schema { instance_id: String, columns: Vec<String> },
    Batch { instance_id: String, page: String, total: usize, remaining: usize },
    Autocomplete { instance_id: String, column: String, program: String, fills: Vec<(usize, String)> },
    Computed { instance_id: String, formula: String, column: String, replaces_column: bool },
    Rule { name: String, steps: Vec<ToolCall>, others: Vec<String> },
    Join { tables: Vec<String>, strategy: MergeStrategy, key: Option<String>, format: Vec<(String, String)> },
    Normalize { instance_id: String, column: String, changes: Vec<CellChange> },
    Extraneous { instance_id: String, column: String, pattern: String, count: usize },
    FillMissing { instance_id: String, column: String, missing: usize },
    TypeFix { instance_id: String, column: String, rows: Vec<usize> },
    AutoViz { instance_id: String, x: String, y: String },
    AltChart { visualization_id: String, from: ChartType, to: ChartType },
    Filter { instance_id: String, visualization_id: String, conditions: Vec<FilterCondition>, operator: BoolOp },
    Repair { visualization_id: String, missing: Vec<String>, encodings: BTreeMap<Channel, String> },
}

impl Binding {
    /// Instance the suggestion would be rendered on, for in-situ display.
    pub fn target(&self) -> Option<&str> {
        match self {
            Binding::Pages { .. } | Binding::Elements { .. } | Binding::Rule { .. } => None,
            Binding::Join { tables, .. } => tables.first().map(String::as_str),
            Binding::AltChart { visualization_id, .. } | Binding::Repair { visualization_id, .. } => Some(visualization_id),
            Binding::Schema { instance_id, .. }
            | Binding::Batch { instance_id, .. }
            | Binding::Autocomplete { instance_id, .. }
            | Binding::Computed { instance_id, .. }
            | Binding::Normalize { instance_id, .. }
            | Binding::Extraneous { instance_id, .. }
            | Binding::FillMissing { instance_id, .. }
            | Binding::TypeFix { instance_id, .. }
            | Binding::AutoViz { instance_id, .. }
            | Binding::Filter { instance_id, .. } => Some(instance_id),
        }
    }

    pub fn page(&self) -> Option<&str> {
        match self {
            Binding::Elements { page, .. } | Binding::Batch { page, .. } => Some(page),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Firing {
    pub rule: RuleId,
    pub scope: Scope,
    /// Identifies the situation so a dismissed suggestion is not re-offered.
    pub key: String,
    /// One past the index of the newest event that caused the firing; 0 for
    /// rules that read only the workspace state.
    pub recency: usize,
    pub binding: Binding,
}

pub struct TriggerContext<'a> {
    pub state: &'a WorkspaceState,
    /// Major events, oldest first.
    pub events: &'a [InteractionEvent],
    pub snapshots: &'a SnapshotStore,
}

/// Every firing in the current situation, ordered by rule then key.
pub fn evaluate_triggers(ctx: &TriggerContext) -> Vec<Firing> {
    let mut out = Vec::new();
    let mut push = |rule: RuleId, key: String, recency: usize, binding: Binding, scopes: &[Scope]| {
        for &scope in scopes {
            out.push(Firing { rule, scope, key: key.clone(), recency, binding: binding.clone() });
        }
    };
    let both = |r: RuleId| r.scopes();

    if let Some((k, r, b)) = webpage_suggestion(ctx) {
        push(RuleId::WebpageSuggestion, k, r, b, both(RuleId::WebpageSuggestion));
    }
    if let Some((k, r, b)) = element_selection(ctx) {
        push(RuleId::ElementSelection, k, r, b, both(RuleId::ElementSelection));
    }
    for (k, b) in schema_inference(ctx) {
        push(RuleId::SchemaInference, k, 0, b, both(RuleId::SchemaInference));
    }
    if let Some((k, r, b)) = batch_extraction(ctx) {
        push(RuleId::BatchExtraction, k, r, b, both(RuleId::BatchExtraction));
    }
    for (k, r, b) in autocomplete(ctx) {
        push(RuleId::Autocomplete, k, r, b, both(RuleId::Autocomplete));
    }
    for (k, r, b, scope) in computed_columns(ctx) {
        push(RuleId::ComputedColumns, k, r, b, &[scope]);
    }
    if let Some((k, r, b)) = sorting_filtering_rule(ctx) {
        push(RuleId::SortingFilteringRule, k, r, b, both(RuleId::SortingFilteringRule));
    }
    for (k, b) in joining_tables(ctx) {
        push(RuleId::JoiningTables, k, 0, b, both(RuleId::JoiningTables));
    }
    for (k, r, b) in entity_resolution(ctx) {
        push(RuleId::EntityResolution, k, r, b, both(RuleId::EntityResolution));
    }
    for (k, r, b) in remove_extraneous(ctx) {
        push(RuleId::RemoveExtraneous, k, r, b, both(RuleId::RemoveExtraneous));
    }
    for (k, r, b, scope) in fill_missing(ctx) {
        push(RuleId::FillMissing, k, r, b, &[scope]);
    }
    for (k, r, b) in type_correction(ctx) {
        push(RuleId::TypeCorrection, k, r, b, both(RuleId::TypeCorrection));
    }
    if let Some((k, r, b)) = auto_viz(ctx) {
        push(RuleId::AutoViz, k, r, b, both(RuleId::AutoViz));
    }
    if let Some((k, r, b)) = alternative_chart(ctx) {
        push(RuleId::AlternativeChart, k, r, b, both(RuleId::AlternativeChart));
    }
    if let Some((k, r, b)) = interactive_filter(ctx) {
        push(RuleId::InteractiveFilter, k, r, b, both(RuleId::InteractiveFilter));
    }
    for (k, b) in chart_repair(ctx) {
        push(RuleId::ChartRepair, k, 0, b, both(RuleId::ChartRepair));
    }
    out
}

/// The set of rules that fire, ignoring scope and key.
pub fn fired_rules(ctx: &TriggerContext) -> BTreeSet<RuleId> {
    evaluate_triggers(ctx).into_iter().map(|f| f.rule).collect()
}

fn words(s: &str) -> BTreeSet<String> {
    const STOP: &[&str] = &["the", "and", "for", "with", "under", "over", "best", "top", "from"];
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.len() >= 3)
        .map(str::to_lowercase)
        .filter(|w| !STOP.contains(&w.as_str()))
        .collect()
}

fn webpage_suggestion(ctx: &TriggerContext) -> Option<(String, usize, Binding)> {
    let (i, title) = ctx.events.iter().enumerate().rev().find_map(|(i, e)| match &e.kind {
        EventKind::WorkspaceCreated { title } => Some((i, title)),
        _ => None,
    })?;
    if title.trim().is_empty() || !ctx.state.instances.is_empty() {
        return None;
    }
    let later_work = ctx.events[i + 1..].iter().any(|e| {
        matches!(e.kind, EventKind::ElementCaptured { .. } | EventKind::SelectionMade { .. } | EventKind::TableCreated { .. })
    });
    if later_work {
        return None;
    }
    let want = words(title);
    let mut scored: Vec<(usize, String)> = ctx
        .snapshots
        .iter()
        .map(|s| (want.intersection(&words(&s.dom.text_content(0))).count(), s.url.clone()))
        .filter(|(n, _)| *n > 0)
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut urls: Vec<String> = Vec::new();
    for (_, u) in scored {
        if !urls.contains(&u) && urls.len() < 3 {
            urls.push(u);
        }
    }
    Some((format!("title:{}", title.trim().to_lowercase()), i + 1, Binding::Pages { title: title.clone(), urls }))
}

fn element_selection(ctx: &TriggerContext) -> Option<(String, usize, Binding)> {
    let picks: Vec<(usize, &str, usize)> = ctx
        .events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match &e.kind {
            EventKind::SelectionMade { snapshot_id: Some(s), node_id: Some(n), .. } => Some((i, s.as_str(), *n)),
            _ => None,
        })
        .collect();
    let [.., (_, sa, na), (ib, sb, nb)] = picks.as_slice() else { return None };
    if sa != sb || na == nb {
        return None;
    }
    let snap = ctx.snapshots.get(sa)?;
    let ex = [ElementSelection::new(snap, *na).ok()?, ElementSelection::new(snap, *nb).ok()?];
    let sel = generalize_selection(snap, &ex).ok()?;
    let matched = crate::extract::selector::match_nodes(&snap.dom, &sel.path_pattern);
    if matched.len() <= 2 {
        return None;
    }
    let mut exemplars = vec![*na, *nb];
    exemplars.sort_unstable();
    let key = format!("{}:{:?}", sa, exemplars);
    Some((key, ib + 1, Binding::Elements { page: sa.to_string(), exemplars, matched }))
}

/// Tables with default headers over at least three captured cells. Two
/// captures alone are the batch-extraction situation.
fn schema_inference(ctx: &TriggerContext) -> Vec<(String, Binding)> {
    let mut out = Vec::new();
    for t in ctx.state.tables() {
        let cols: Vec<String> = t
            .columns
            .iter()
            .enumerate()
            .filter(|(ci, c)| is_default_column_name(&c.name) && t.rows.iter().filter(|r| r[*ci].source.is_some()).count() >= 3)
            .map(|(_, c)| c.name.clone())
            .collect();
        if !cols.is_empty() {
            out.push((format!("{}:{}", t.id, cols.join("|")), Binding::Schema { instance_id: t.id.clone(), columns: cols }));
        }
    }
    out
}

fn batch_extraction(ctx: &TriggerContext) -> Option<(String, usize, Binding)> {
    let caps: Vec<(usize, &str, &str, usize)> = ctx
        .events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match &e.kind {
            EventKind::ElementCaptured { instance_id, snapshot_id, node_id } => Some((i, instance_id.as_str(), snapshot_id.as_str(), *node_id)),
            _ => None,
        })
        .collect();
    // The newest capture, paired with the latest earlier capture into the
    // same table from the same page that generalizes with it (the same
    // field of another record).
    let (&(ib, ta, sa, nb), earlier) = caps.split_last()?;
    let table = ctx.state.table(ta).ok()?;
    let snap = ctx.snapshots.get(sa)?;
    let last = ElementSelection::new(snap, nb).ok()?;
    let sel = earlier.iter().rev().filter(|(_, t, s, n)| *t == ta && *s == sa && *n != nb).find_map(|(_, _, _, n)| {
        generalize_selection(snap, &[ElementSelection::new(snap, *n).ok()?, last.clone()]).ok()
    })?;
    let groups: Vec<Vec<usize>> = (0..table.columns.len())
        .map(|c| {
            let cells = table.rows.iter().filter_map(|r| r[c].source.as_ref());
            cells.filter(|s| s.snapshot_id == snap.snapshot_id).map(|s| s.node_id).collect()
        })
        .collect();
    let mut containers = union_containers(snap, &groups);
    if containers.is_empty() {
        containers = sel.containers(&snap.dom);
    }
    let owned = containers
        .iter()
        .filter(|&&c| {
            table.rows.iter().flatten().any(|cell| {
                cell.source.as_ref().is_some_and(|s| s.snapshot_id == snap.snapshot_id && snap.dom.is_ancestor_or_self(c, s.node_id))
            })
        })
        .count();
    let remaining = containers.len() - owned;
    if remaining == 0 {
        return None;
    }
    let key = format!("{}:{}", ta, sa);
    Some((key, ib + 1, Binding::Batch { instance_id: ta.to_string(), page: sa.to_string(), total: containers.len(), remaining }))
}

/// Edits per (table, column), in event order, with the index of the newest.
fn column_edits(events: &[InteractionEvent]) -> BTreeMap<(String, String), (usize, Vec<CellEditRecord>)> {
    let mut out: BTreeMap<(String, String), (usize, Vec<CellEditRecord>)> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        let (t, c, rec) = match &e.kind {
            EventKind::CellEdited { instance_id, row, column, before, after } => {
                (instance_id, column, CellEditRecord { row: *row, before: before.clone(), after: after.clone() })
            }
            EventKind::CellDeleted { instance_id, row, column, before } => {
                (instance_id, column, CellEditRecord { row: *row, before: before.clone(), after: None })
            }
            _ => continue,
        };
        let slot = out.entry((t.clone(), c.clone())).or_default();
        slot.0 = i;
        slot.1.push(rec);
    }
    out
}

fn column_strings(t: &TableInstance, col: usize) -> Vec<Option<String>> {
    t.column_values(col).map(|v| v.display_string()).collect()
}

fn is_formula_entry(s: &str) -> bool {
    s.trim_start().starts_with('=')
}

/// Rows the user filled from empty, whose current value is still that fill.
fn user_fills(t: &TableInstance, col: usize, edits: &[CellEditRecord]) -> BTreeMap<usize, String> {
    let values = column_strings(t, col);
    let mut fills = BTreeMap::new();
    for e in edits {
        if let (None, Some(after)) = (&e.before, &e.after) {
            if !is_formula_entry(after) && values.get(e.row).and_then(|v| v.as_deref()) == Some(after.as_str()) {
                fills.insert(e.row, after.clone());
            }
        }
    }
    fills
}

fn autocomplete(ctx: &TriggerContext) -> Vec<(String, usize, Binding)> {
    let mut out = Vec::new();
    for ((tid, cname), (last, edits)) in column_edits(ctx.events) {
        let Ok(t) = ctx.state.table(&tid) else { continue };
        let Some(ci) = t.column_index(&cname) else { continue };
        let fills = user_fills(t, ci, &edits);
        if fills.len() < 2 {
            continue;
        }
        let values = column_strings(t, ci);
        let new_column = values.iter().enumerate().all(|(r, v)| v.is_none() || fills.contains_key(&r));
        let empty: Vec<usize> = (0..values.len()).filter(|&r| values[r].is_none()).collect();
        if !new_column || empty.is_empty() {
            continue;
        }
        let inputs = |r: usize| -> Vec<(String, Option<String>)> {
            t.columns
                .iter()
                .enumerate()
                .filter(|(j, c)| *j != ci && c.declared_type != ValueType::ImageRef)
                .map(|(j, c)| (c.name.clone(), t.value(r, j).display_string()))
                .collect()
        };
        let examples: Vec<Example> = fills.iter().map(|(&r, v)| Example { inputs: inputs(r), output: v.clone() }).collect();
        let Ok(program) = infer_fill_program(&examples) else { continue };
        let fills: Vec<(usize, String)> = empty.iter().filter_map(|&r| program.expr.eval(&inputs(r)).map(|v| (r, v))).collect();
        if fills.is_empty() {
            continue;
        }
        let program = program.to_string();
        out.push((
            format!("{tid}:{cname}:{program}"),
            last + 1,
            Binding::Autocomplete { instance_id: tid, column: cname, program, fills },
        ));
    }
    out
}

/// Column pairs whose product is the usual total.
const PRODUCT_PAIRS: &[(&[&str], &[&str], &str)] = &[
    (&["price", "unit price", "unit cost", "cost"], &["quantity", "qty", "units", "count"], "Total"),
    (&["hours"], &["rate", "hourly rate"], "Amount"),
];

fn computed_columns(ctx: &TriggerContext) -> Vec<(String, usize, Binding, Scope)> {
    let mut out = Vec::new();
    for ((tid, cname), (last, edits)) in column_edits(ctx.events) {
        let Ok(t) = ctx.state.table(&tid) else { continue };
        let Some(ci) = t.column_index(&cname) else { continue };
        let Some(entry) = edits.iter().rev().find_map(|e| e.after.as_deref().filter(|a| is_formula_entry(a))) else { continue };
        let formula = entry.trim_start().trim_start_matches('=').trim().to_string();
        let Ok(expr) = parse_formula(&formula) else { continue };
        let mut refs = Vec::new();
        expr.columns(&mut refs);
        if refs.is_empty() || refs.iter().any(|r| r == &cname || t.column_index(r).is_none()) {
            continue;
        }
        let others_filled = t.rows.iter().enumerate().any(|(r, row)| {
            !row[ci].value.is_missing() && !edits.iter().any(|e| e.row == r && e.after.as_deref().is_some_and(is_formula_entry))
        });
        if others_filled {
            continue;
        }
        out.push((
            format!("{tid}:{cname}:{formula}"),
            last + 1,
            Binding::Computed { instance_id: tid, formula, column: cname, replaces_column: true },
            Scope::Micro,
        ));
    }
    for t in ctx.state.tables() {
        let numeric = |names: &[&str]| {
            t.columns
                .iter()
                .find(|c| c.declared_type == ValueType::Number && names.contains(&c.name.to_lowercase().as_str()))
                .map(|c| c.name.clone())
        };
        for (a, b, result) in PRODUCT_PAIRS {
            let (Some(a), Some(b)) = (numeric(a), numeric(b)) else { continue };
            if t.column_index(result).is_some() {
                continue;
            }
            let formula = format!("[{a}] * [{b}]");
            out.push((
                format!("{}:{formula}", t.id),
                0,
                Binding::Computed { instance_id: t.id.clone(), formula, column: result.to_string(), replaces_column: false },
                Scope::Macro,
            ));
        }
    }
    out
}

fn column_names(t: &TableInstance) -> BTreeSet<String> {
    t.columns.iter().map(|c| c.name.clone()).collect()
}

/// Sort or filter step with the target abstracted, plus a readable name.
fn reusable_step(kind: &EventKind) -> Option<(String, String, Tool)> {
    use crate::transform::tools::{TableFilterArgs, TableSortArgs};
    match kind {
        EventKind::SortApplied { instance_id, column, order } => Some((
            instance_id.clone(),
            format!("sort-{}-{}", column.to_lowercase().replace(' ', "-"), if *order == SortOrder::Asc { "asc" } else { "desc" }),
            Tool::TableSort(TableSortArgs { instance_id: RULE_TARGET.into(), column_name: column.clone(), order: *order }),
        )),
        EventKind::FilterApplied { instance_id, conditions, operator } => Some((
            instance_id.clone(),
            format!("filter-{}", conditions.iter().map(|c| c.column.to_lowercase().replace(' ', "-")).collect::<Vec<_>>().join("-")),
            Tool::TableFilter(TableFilterArgs {
                instance_id: RULE_TARGET.into(),
                conditions: conditions.clone(),
                operator: *operator,
                visualization_id: None,
            }),
        )),
        _ => None,
    }
}

fn sorting_filtering_rule(ctx: &TriggerContext) -> Option<(String, usize, Binding)> {
    let ops: Vec<(usize, String, String, Tool)> = ctx
        .events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| reusable_step(&e.kind).map(|(t, n, tool)| (i, t, n, tool)))
        .collect();
    for (j, (ib, tb, name, tool)) in ops.iter().enumerate().rev() {
        let Ok(b) = ctx.state.table(tb) else { continue };
        for (_, ta, _, other) in ops[..j].iter().rev() {
            if ta == tb || other != tool {
                continue;
            }
            let Ok(a) = ctx.state.table(ta) else { continue };
            let schema = column_names(a);
            if schema != column_names(b) {
                continue;
            }
            if ctx.state.rules.values().any(|r| r.steps.len() == 1 && r.steps[0].tool == *tool) {
                return None;
            }
            let others: Vec<String> = ctx
                .state
                .tables()
                .filter(|t| t.id != a.id && t.id != b.id && column_names(t) == schema)
                .map(|t| t.id.clone())
                .collect();
            let steps = vec![ToolCall::new("r1", tool.clone())];
            let mut pair = [ta.clone(), tb.clone()];
            pair.sort();
            let key = format!("{name}:{}", pair.join("+"));
            return Some((key, ib + 1, Binding::Rule { name: name.clone(), steps, others }));
        }
    }
    None
}

fn provenance_urls(t: &TableInstance) -> BTreeSet<String> {
    t.rows.iter().flatten().filter_map(|c| c.source.as_ref().map(|s| s.url.clone())).collect()
}

fn merged_already(state: &WorkspaceState, a: &TableInstance, b: &TableInstance) -> bool {
    a.derived_from.contains(&b.id)
        || b.derived_from.contains(&a.id)
        || state.tables().any(|t| t.derived_from.contains(&a.id) && t.derived_from.contains(&b.id))
}

/// Shared text columns holding prices written in more than one way.
fn currency_mismatches(a: &TableInstance, b: &TableInstance) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for col in &a.columns {
        let Some(bi) = b.column_index(&col.name) else { continue };
        let ai = a.column_index(&col.name).expect("own column");
        if col.declared_type != ValueType::Text || b.columns[bi].declared_type != ValueType::Text {
            continue;
        }
        let prices = |t: &TableInstance, ci: usize| -> Option<Vec<String>> {
            let vals: Vec<String> = column_strings(t, ci).into_iter().flatten().collect();
            let ok = !vals.is_empty() && vals.iter().all(|v| parse_number(v).is_some() && detect_currency(v).is_some());
            ok.then_some(vals)
        };
        let (Some(va), Some(vb)) = (prices(a, ai), prices(b, bi)) else { continue };
        for (t, vals) in [(a, va), (b, vb)] {
            if vals.iter().any(|v| canonical_currency(v, "USD").as_deref() != Some(v.as_str())) {
                out.push((t.id.clone(), col.name.clone()));
            }
        }
    }
    out
}

fn joining_tables(ctx: &TriggerContext) -> Vec<(String, Binding)> {
    let tables: Vec<&TableInstance> = ctx.state.tables().collect();
    let mut out = Vec::new();
    for (i, a) in tables.iter().enumerate() {
        for b in &tables[i + 1..] {
            if a.row_count() == 0 || b.row_count() == 0 || merged_already(ctx.state, a, b) {
                continue;
            }
            let tables = vec![a.id.clone(), b.id.clone()];
            let format = currency_mismatches(a, b);
            let (ua, ub) = (provenance_urls(a), provenance_urls(b));
            if column_names(a) == column_names(b) && !ua.is_empty() && !ub.is_empty() && ua.is_disjoint(&ub) {
                out.push((format!("{}+{}:union", a.id, b.id), Binding::Join { tables, strategy: MergeStrategy::Union, key: None, format }));
                continue;
            }
            let mut best: Option<(bool, usize, String)> = None;
            for col in &a.columns {
                let Some(bi) = b.column_index(&col.name) else { continue };
                if b.columns[bi].declared_type != col.declared_type || col.declared_type == ValueType::ImageRef {
                    continue;
                }
                let ai = a.column_index(&col.name).expect("own column");
                let keys: BTreeSet<String> = a.column_values(ai).filter(|v| !v.is_missing()).map(|v| v.group_key()).collect();
                let overlap = b.column_values(bi).filter(|v| !v.is_missing() && keys.contains(&v.group_key())).count();
                if overlap == 0 {
                    continue;
                }
                let lower = col.name.to_lowercase();
                let id_like = lower == "id" || lower.ends_with("_id") || lower.ends_with(" id");
                let cand = (id_like, overlap, col.name.clone());
                if best.as_ref().map_or(true, |b| (cand.0, cand.1) > (b.0, b.1)) {
                    best = Some(cand);
                }
            }
            if let Some((_, _, key)) = best {
                out.push((
                    format!("{}+{}:{key}", a.id, b.id),
                    Binding::Join { tables, strategy: MergeStrategy::Inner, key: Some(key), format },
                ));
            }
        }
    }
    out
}

fn entity_resolution(ctx: &TriggerContext) -> Vec<(String, usize, Binding)> {
    let mut out = Vec::new();
    for ((tid, cname), (last, edits)) in column_edits(ctx.events) {
        let Ok(t) = ctx.state.table(&tid) else { continue };
        let Some(ci) = t.column_index(&cname) else { continue };
        if t.columns[ci].declared_type != ValueType::Text {
            continue;
        }
        let Some(p) = detect_normalization(&column_strings(t, ci), &edits) else { continue };
        let canon: BTreeSet<&String> = p.canonical.values().collect();
        let key = format!("{tid}:{cname}:{}", canon.into_iter().cloned().collect::<Vec<_>>().join("|"));
        out.push((key, last + 1, Binding::Normalize { instance_id: tid, column: cname, changes: p.changes }));
    }
    out
}

fn remove_extraneous(ctx: &TriggerContext) -> Vec<(String, usize, Binding)> {
    let mut out = Vec::new();
    for ((tid, cname), (last, edits)) in column_edits(ctx.events) {
        let Ok(t) = ctx.state.table(&tid) else { continue };
        let Some(ci) = t.column_index(&cname) else { continue };
        if t.columns[ci].declared_type != ValueType::Text {
            continue;
        }
        let Some(p) = detect_extraneous(&column_strings(t, ci), &edits) else { continue };
        out.push((
            format!("{tid}:{cname}:{}", p.search_pattern),
            last + 1,
            Binding::Extraneous { instance_id: tid, column: cname, pattern: p.search_pattern, count: p.match_count },
        ));
    }
    out
}

fn fill_missing(ctx: &TriggerContext) -> Vec<(String, usize, Binding, Scope)> {
    let mut out = Vec::new();
    let edits = column_edits(ctx.events);
    for t in ctx.state.tables() {
        for (ci, col) in t.columns.iter().enumerate() {
            if col.declared_type != ValueType::Number {
                continue;
            }
            let missing = t.missing_count(ci);
            let present = t.row_count() - missing;
            if missing == 0 || present == 0 {
                continue;
            }
            let key = format!("{}:{}", t.id, col.name);
            let binding = Binding::FillMissing { instance_id: t.id.clone(), column: col.name.clone(), missing };
            if let Some((last, recs)) = edits.get(&(t.id.clone(), col.name.clone())) {
                let fills = user_fills(t, ci, recs);
                let existing = t.rows.iter().enumerate().any(|(r, row)| !row[ci].value.is_missing() && !fills.contains_key(&r));
                let just_filled = recs.last().is_some_and(|e| e.before.is_none() && e.after.is_some());
                if just_filled && existing {
                    out.push((key.clone(), last + 1, binding.clone(), Scope::Micro));
                }
            }
            if missing >= 2 {
                out.push((key, 0, binding, Scope::Macro));
            }
        }
    }
    out
}

/// A text column is mostly numeric when at least 60% of its values parse.
fn non_numeric_rows(t: &TableInstance, ci: usize) -> Option<Vec<usize>> {
    let vals = column_strings(t, ci);
    let present: Vec<(usize, &String)> = vals.iter().enumerate().filter_map(|(r, v)| v.as_ref().map(|v| (r, v))).collect();
    let bad: Vec<usize> = present.iter().filter(|(_, v)| parse_number(v).is_none()).map(|(r, _)| *r).collect();
    let good = present.len() - bad.len();
    (good * 10 >= present.len() * 6 && good > 0).then_some(bad)
}

fn type_correction(ctx: &TriggerContext) -> Vec<(String, usize, Binding)> {
    let mut out = Vec::new();
    for ((tid, cname), (last, edits)) in column_edits(ctx.events) {
        let Ok(t) = ctx.state.table(&tid) else { continue };
        let Some(ci) = t.column_index(&cname) else { continue };
        if t.columns[ci].declared_type != ValueType::Text {
            continue;
        }
        let removed_text = edits
            .last()
            .is_some_and(|e| e.after.is_none() && e.before.as_deref().is_some_and(|b| parse_number(b).is_none()));
        if !removed_text {
            continue;
        }
        let Some(rows) = non_numeric_rows(t, ci) else { continue };
        if rows.is_empty() {
            continue;
        }
        out.push((format!("{tid}:{cname}"), last + 1, Binding::TypeFix { instance_id: tid, column: cname, rows }));
    }
    out
}

/// Text columns with repeated values and a small number of distinct ones.
pub fn categorical_columns(t: &TableInstance) -> Vec<String> {
    t.columns
        .iter()
        .enumerate()
        .filter(|(ci, c)| {
            if !matches!(c.declared_type, ValueType::Text | ValueType::Boolean) {
                return false;
            }
            let present: Vec<String> = t.column_values(*ci).filter(|v| !v.is_missing()).map(|v| v.group_key()).collect();
            let distinct: BTreeSet<&String> = present.iter().collect();
            distinct.len() >= 2 && distinct.len() <= 20 && distinct.len() < present.len()
        })
        .map(|(_, c)| c.name.clone())
        .collect()
}

pub fn numeric_columns(t: &TableInstance) -> Vec<String> {
    t.columns.iter().filter(|c| c.declared_type == ValueType::Number).map(|c| c.name.clone()).collect()
}

fn latest_selection(events: &[InteractionEvent]) -> Option<(usize, &str, &[usize])> {
    events.iter().enumerate().rev().find_map(|(i, e)| match &e.kind {
        EventKind::SelectionMade { instance_id: Some(t), rows, .. } => Some((i, t.as_str(), rows.as_slice())),
        _ => None,
    })
}

fn auto_viz(ctx: &TriggerContext) -> Option<(String, usize, Binding)> {
    let (i, tid, rows) = latest_selection(ctx.events)?;
    if !rows.is_empty() {
        return None;
    }
    let t = ctx.state.table(tid).ok()?;
    if ctx.state.visualizations_of(tid).next().is_some() {
        return None;
    }
    let x = categorical_columns(t).into_iter().next()?;
    let y = numeric_columns(t).into_iter().next()?;
    Some((format!("{tid}:{x}:{y}"), i + 1, Binding::AutoViz { instance_id: tid.to_string(), x, y }))
}

/// A better chart type for the current encoding, if the current one is a
/// poor fit.
pub fn better_chart(chart: ChartType, x: Option<ValueType>, y: Option<ValueType>) -> Option<ChartType> {
    let num = |t: Option<ValueType>| t == Some(ValueType::Number);
    let cat = |t: Option<ValueType>| matches!(t, Some(ValueType::Text | ValueType::Boolean));
    match chart {
        ChartType::Line if cat(x) && num(y) => Some(ChartType::Bar),
        ChartType::Bar if num(x) && num(y) => Some(ChartType::Scatter),
        ChartType::Scatter if cat(x) && num(y) => Some(ChartType::Bar),
        ChartType::Histogram if cat(x) => Some(ChartType::Bar),
        _ => None,
    }
}

fn alternative_chart(ctx: &TriggerContext) -> Option<(String, usize, Binding)> {
    let (i, vid) = ctx.events.iter().enumerate().rev().find_map(|(i, e)| match &e.kind {
        EventKind::VizCreated { instance_id } | EventKind::VizEdited { instance_id } => Some((i, instance_id.as_str())),
        _ => None,
    })?;
    let v = ctx.state.viz(vid).ok()?;
    let t = ctx.state.table(&v.source_instance_id).ok()?;
    let ty = |ch: Channel| v.encoded(ch).and_then(|c| t.column(c)).map(|c| c.declared_type);
    let to = better_chart(v.chart_type, ty(Channel::X), ty(Channel::Y))?;
    Some((format!("{vid}:{}->{}", v.chart_type.as_str(), to.as_str()), i + 1, Binding::AltChart { visualization_id: vid.to_string(), from: v.chart_type, to }))
}

/// A predicate over one column that keeps exactly the selected rows.
pub fn selection_predicate(t: &TableInstance, rows: &[usize], prefer: Option<&str>) -> Option<(Vec<FilterCondition>, BoolOp)> {
    let chosen: BTreeSet<usize> = rows.iter().copied().filter(|&r| r < t.row_count()).collect();
    if chosen.is_empty() || chosen.len() == t.row_count() {
        return None;
    }
    let mut order: Vec<usize> = (0..t.columns.len()).collect();
    if let Some(p) = prefer.and_then(|p| t.column_index(p)) {
        order.retain(|&c| c != p);
        order.insert(0, p);
    }
    for ci in order {
        let col = &t.columns[ci];
        let inside: Vec<_> = chosen.iter().map(|&r| t.value(r, ci)).collect();
        if inside.iter().any(|v| v.is_missing()) {
            continue;
        }
        let outside: Vec<_> = (0..t.row_count()).filter(|r| !chosen.contains(r)).map(|r| t.value(r, ci)).collect();
        match col.declared_type {
            ValueType::Number => {
                let nums: Vec<f64> = inside.iter().filter_map(|v| v.as_number()).collect();
                let (lo, hi) = nums.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &n| (a.min(n), b.max(n)));
                let leaks = outside.iter().any(|v| v.as_number().is_some_and(|n| n >= lo && n <= hi));
                if !leaks {
                    return Some((
                        vec![
                            FilterCondition::new(&col.name, Comparator::Gte, json!(lo)),
                            FilterCondition::new(&col.name, Comparator::Lte, json!(hi)),
                        ],
                        BoolOp::And,
                    ));
                }
            }
            ValueType::Text => {
                let keep: BTreeSet<String> = inside.iter().filter_map(|v| v.as_text().map(str::to_string)).collect();
                let leaks = outside.iter().any(|v| v.as_text().is_some_and(|s| keep.contains(s)));
                if leaks {
                    continue;
                }
                if keep.len() == 1 {
                    let only = keep.into_iter().next().expect("one value");
                    return Some((vec![FilterCondition::new(&col.name, Comparator::Eq, Value::String(only))], BoolOp::And));
                }
                let alts: Vec<String> = keep.iter().map(|s| regex::escape(s)).collect();
                return Some((
                    vec![FilterCondition::new(&col.name, Comparator::RegexMatch, Value::String(format!("^(?:{})$", alts.join("|"))))],
                    BoolOp::And,
                ));
            }
            _ => {}
        }
    }
    None
}

fn interactive_filter(ctx: &TriggerContext) -> Option<(String, usize, Binding)> {
    let (i, tid, rows) = latest_selection(ctx.events)?;
    if rows.is_empty() {
        return None;
    }
    let t = ctx.state.table(tid).ok()?;
    let v = ctx.state.visualizations_of(tid).next()?;
    let (conditions, operator) = selection_predicate(t, rows, v.encoded(Channel::X))?;
    let key = format!("{}:{}", v.id, serde_json::to_string(&conditions).unwrap_or_default());
    Some((key, i + 1, Binding::Filter { instance_id: tid.to_string(), visualization_id: v.id.clone(), conditions, operator }))
}

/// Charts whose source table no longer has an encoded column. Each broken
/// channel is re-mapped to an unused column of a fitting type, or dropped.
fn chart_repair(ctx: &TriggerContext) -> Vec<(String, Binding)> {
    let mut out = Vec::new();
    for v in ctx.state.visualizations() {
        let Ok(t) = ctx.state.table(&v.source_instance_id) else { continue };
        let missing = v.missing_columns(t);
        if missing.is_empty() {
            continue;
        }
        let mut encodings = BTreeMap::new();
        let mut used: BTreeSet<&str> = v.encodings.values().filter(|c| t.column_index(c).is_some()).map(String::as_str).collect();
        for (ch, col) in &v.encodings {
            if t.column_index(col).is_some() {
                encodings.insert(*ch, col.clone());
                continue;
            }
            let fits = |c: &Column| match ch {
                Channel::Y | Channel::Size => c.declared_type == ValueType::Number,
                Channel::Color => c.declared_type == ValueType::Text,
                Channel::X => true,
            };
            if let Some(c) = t.columns.iter().find(|c| fits(c) && !used.contains(c.name.as_str())) {
                used.insert(&c.name);
                encodings.insert(*ch, c.name.clone());
            }
        }
        if encodings.is_empty() {
            continue;
        }
        let key = format!("{}:{}", v.id, missing.join(","));
        out.push((key, Binding::Repair { visualization_id: v.id.clone(), missing, encodings }));
    }
    out
}
