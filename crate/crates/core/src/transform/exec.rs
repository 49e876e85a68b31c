//! Tool dispatch: runs one validated call against a workspace state and
//! returns the next state. The input state is never modified.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;
use serde_json::{json, Value};

use super::filter::{coerce_operand, row_predicate};
use super::merge::{merge_instances, MergeOptions};
use super::tools::*;
use super::{aggregate, convert, fill, format, formula, positional, replace, reshape, sort, ToolError};
use crate::extract::selector::{default_fields, field_name, field_path, infer_column, match_nodes, resolve_field, union_containers};
use crate::extract::{
    capture_element, css_select, generalize_selection, trace_source, ElementSelection, ExtractError, FieldPath, PageSnapshot,
    SnapshotStore,
};
use crate::table::{Cell, Column, SourceRef, TableInstance};
use crate::value::{parse_number, CellValue, ValueType};
use crate::viz::{Interaction, VisualizationInstance, VizFilter};
use crate::workspace::{Instance, RuleObject, WorkspaceState};

/// Read-only context a call may consult.
#[derive(Clone, Copy)]
pub struct ExecEnv<'a> {
    pub snapshots: &'a SnapshotStore,
}

/// Side effects for the UI; they never change workspace state.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "effect", rename_all = "kebab-case")]
pub enum Effect {
    #[serde(rename_all = "camelCase")]
    OpenPage { url: String, snapshot_id: String },
    #[serde(rename_all = "camelCase")]
    Highlight { snapshot_id: String, node_ids: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct ToolOutcome {
    pub state: WorkspaceState,
    /// Tool-specific result record (match counts, conversion failures, ...).
    pub report: Value,
    pub effects: Vec<Effect>,
    /// Instances created or modified, in first-touch order.
    pub touched: Vec<String>,
}

impl ToolOutcome {
    fn new(state: WorkspaceState) -> Self {
        Self { state, report: Value::Null, effects: Vec::new(), touched: Vec::new() }
    }

    fn touch(&mut self, id: &str) {
        if !self.touched.iter().any(|t| t == id) {
            self.touched.push(id.to_string());
        }
    }
}

/// Executes one call. Errors leave no trace: the caller keeps its state.
pub fn execute(state: &WorkspaceState, call: &ToolCall, env: &ExecEnv) -> Result<ToolOutcome, ToolError> {
    let mut out = ToolOutcome::new(state.clone());
    match &call.tool {
        Tool::OpenPage(a) => {
            let snap = env.snapshots.resolve(&a.url)?;
            out.effects.push(Effect::OpenPage { url: snap.url.clone(), snapshot_id: snap.snapshot_id.clone() });
            out.report = json!({ "snapshotId": snap.snapshot_id });
        }
        Tool::SelectElements(a) => {
            let snap = env.snapshots.resolve(&a.page_url)?;
            let nodes = select_nodes(snap, a.selector.as_deref(), &a.node_ids)?;
            out.report = json!({ "matchCount": nodes.len(), "nodeIds": nodes });
            out.effects.push(Effect::Highlight { snapshot_id: snap.snapshot_id.clone(), node_ids: nodes });
        }
        Tool::InferSchema(a) => infer_schema(&mut out, a, env)?,
        Tool::ExtractBatch(a) => extract_batch(&mut out, a, env)?,
        Tool::UpdateInstance(a) => update_instance(&mut out, a)?,
        Tool::AddComputedColumn(a) => {
            let t = formula::add_computed_column(out.state.table(&a.instance_id)?, &a.formula, &a.new_column_name)?;
            replace_table(&mut out, t);
        }
        Tool::TableSort(a) => {
            let t = sort::table_sort(out.state.table(&a.instance_id)?, &a.column_name, a.order)?;
            replace_table(&mut out, t);
        }
        Tool::TableFilter(a) => match &a.visualization_id {
            Some(vid) => {
                let viz = out.state.viz(vid)?;
                if viz.source_instance_id != a.instance_id {
                    return Err(ToolError::BadArgument(format!("{vid} does not visualize {}", a.instance_id)));
                }
                let _ = row_predicate(out.state.table(&a.instance_id)?, &a.conditions, a.operator)?;
                let mut viz = viz.clone();
                viz.filter = Some(VizFilter { conditions: a.conditions.clone(), operator: a.operator });
                viz.interactions.insert(Interaction::Filter);
                replace_viz(&mut out, viz);
            }
            None => {
                let before = out.state.table(&a.instance_id)?.row_count();
                let t = super::filter::table_filter(out.state.table(&a.instance_id)?, &a.conditions, a.operator)?;
                out.report = json!({ "rowsRemoved": before - t.row_count() });
                replace_table(&mut out, t);
            }
        },
        Tool::MergeInstances(a) => {
            let tables = a.source_instance_ids.iter().map(|id| out.state.table(id)).collect::<Result<Vec<_>, _>>()?;
            let mut merged = merge_instances(&tables, a.merge_strategy, &a.join_columns, MergeOptions { fold_text_keys: a.fold_text_keys })?;
            let name = a.new_instance_name.clone().unwrap_or_else(|| out.state.default_name("Merged"));
            merged.id = out.state.fresh_id(&name);
            merged.name = name;
            merged.lineage.clear();
            merged.derived_from = a.source_instance_ids.clone();
            out.report = json!({ "instanceId": merged.id, "rows": merged.row_count() });
            insert_new(&mut out, Instance::Table(merged));
        }
        Tool::RenameColumn(a) => {
            let t = format::rename_column(out.state.table(&a.instance_id)?, &a.old_column_name, &a.new_column_name)?;
            replace_table(&mut out, t);
            let dependents: Vec<VisualizationInstance> = out.state.visualizations_of(&a.instance_id).cloned().collect();
            for mut viz in dependents {
                let mut changed = false;
                for col in viz.encodings.values_mut() {
                    if *col == a.old_column_name {
                        *col = a.new_column_name.clone();
                        changed = true;
                    }
                }
                if let Some(f) = &mut viz.filter {
                    for c in &mut f.conditions {
                        if c.column == a.old_column_name {
                            c.column = a.new_column_name.clone();
                            changed = true;
                        }
                    }
                }
                if changed {
                    replace_viz(&mut out, viz);
                }
            }
        }
        Tool::FormatColumn(a) => {
            let (t, unformatted) = format::format_column(out.state.table(&a.instance_id)?, &a.old_column_name, &a.format_pattern)?;
            out.report = json!({ "unformatted": unformatted });
            replace_table(&mut out, t);
        }
        Tool::SearchAndReplace(a) => {
            let (t, n) = replace::search_and_replace(
                out.state.table(&a.instance_id)?,
                a.column_name.as_deref(),
                &a.search_pattern,
                a.is_regex,
                &a.replace_with,
            )?;
            out.report = json!({ "replacements": n });
            replace_table(&mut out, t);
        }
        Tool::ConvertColumnType(a) => {
            let (t, report) =
                convert::convert_column_type(out.state.table(&a.instance_id)?, &a.column_name, a.target_type, a.cleaning_pattern.as_deref())?;
            out.report = json!({ "converted": report.converted, "failed": report.failed, "failedRows": report.failed_rows });
            replace_table(&mut out, t);
        }
        Tool::FillMissingValues(a) => {
            let t = out.state.table(&a.instance_id)?;
            let constant = match &a.constant {
                Some(v) => {
                    let ty = t.column(&a.column_name).ok_or_else(|| ToolError::UnknownColumn(a.column_name.clone()))?.declared_type;
                    Some(cell_from_json(v, ty)?)
                }
                None => None,
            };
            let filled = t.missing_count(super::require_column(t, &a.column_name)?);
            let t = fill::fill_missing_values(t, &a.column_name, a.strategy, constant)?;
            out.report = json!({ "filled": filled });
            replace_table(&mut out, t);
        }
        Tool::CreateVisualization(a) => {
            let source = out.state.table(&a.source_instance_id)?;
            let encodings = a.encodings();
            if encodings.is_empty() {
                return Err(ToolError::BadArgument("a visualization needs at least one encoded column".into()));
            }
            check_encodings(source, &encodings)?;
            let name = a.new_instance_name.clone().unwrap_or_else(|| out.state.default_name("Chart"));
            let id = out.state.fresh_id(&name);
            let mut viz = VisualizationInstance::new(id.clone(), name, a.source_instance_id.clone(), a.chart_type, encodings);
            if let Some(i) = &a.interactions {
                viz.interactions = i.clone();
            }
            out.report = json!({ "instanceId": id });
            insert_new(&mut out, Instance::Visualization(viz));
        }
        Tool::UpdateVisualization(a) => {
            let mut viz = out.state.viz(&a.visualization_id)?.clone();
            if let Some(c) = a.chart_type {
                viz.chart_type = c;
            }
            if let Some(e) = &a.encodings {
                check_encodings(out.state.table(&viz.source_instance_id)?, e)?;
                viz.encodings = e.clone();
            }
            replace_viz(&mut out, viz);
        }
        Tool::Reshape(a) => {
            let t = reshape::reshape(out.state.table(&a.instance_id)?, a.direction, &a.key_columns, &a.value_columns)?;
            replace_table(&mut out, t);
        }
        Tool::Aggregate(a) => {
            let mut t = aggregate::aggregate(out.state.table(&a.instance_id)?, &a.group_by, &a.aggregations)?;
            match &a.new_instance_name {
                Some(name) => {
                    t.id = out.state.fresh_id(name);
                    t.name = name.clone();
                    t.lineage.clear();
                    t.derived_from = vec![a.instance_id.clone()];
                    out.report = json!({ "instanceId": t.id });
                    insert_new(&mut out, Instance::Table(t));
                }
                None => replace_table(&mut out, t),
            }
        }
        Tool::PositionalTransform(a) => {
            let t = positional::positional_transform(out.state.table(&a.instance_id)?, a.op, &a.indices)?;
            replace_table(&mut out, t);
        }
        Tool::CreateInstance(a) => {
            let mut inst = a.instance.clone();
            if inst.id().is_empty() {
                let id = out.state.fresh_id(inst.name());
                inst.set_id(id);
            }
            if out.state.instances.contains_key(inst.id()) {
                return Err(ToolError::DuplicateId(inst.id().to_string()));
            }
            match &inst {
                Instance::Table(t) => t.validate()?,
                Instance::Visualization(v) => check_encodings(out.state.table(&v.source_instance_id)?, &v.encodings)?,
            }
            out.report = json!({ "instanceId": inst.id() });
            insert_new(&mut out, inst);
        }
        Tool::DefineRule(a) => {
            if a.name.trim().is_empty() || a.steps.is_empty() {
                return Err(ToolError::BadArgument("a rule needs a name and at least one step".into()));
            }
            if a.steps.iter().any(|s| matches!(s.tool, Tool::DefineRule(_) | Tool::ApplyRule(_))) {
                return Err(ToolError::BadArgument("rules cannot define or apply rules".into()));
            }
            out.state.rules.insert(a.name.clone(), RuleObject { name: a.name.clone(), steps: a.steps.clone() });
        }
        Tool::ApplyRule(a) => {
            let rule = out.state.rules.get(&a.rule_name).cloned().ok_or_else(|| ToolError::UnknownRule(a.rule_name.clone()))?;
            out.state.table(&a.instance_id)?;
            let mut reports = Vec::new();
            for step in &rule.steps {
                let bound = step.bind_rule_target(&a.instance_id)?;
                let next = execute(&out.state, &bound, env)?;
                out.state = next.state;
                out.effects.extend(next.effects);
                for t in &next.touched {
                    out.touch(t);
                }
                reports.push(next.report);
            }
            out.report = Value::Array(reports);
        }
    }
    Ok(out)
}

fn replace_table(out: &mut ToolOutcome, t: TableInstance) {
    out.touch(&t.id);
    out.state.instances.insert(t.id.clone(), Instance::Table(t));
}

fn replace_viz(out: &mut ToolOutcome, v: VisualizationInstance) {
    out.touch(&v.id);
    out.state.instances.insert(v.id.clone(), Instance::Visualization(v));
}

fn insert_new(out: &mut ToolOutcome, inst: Instance) {
    out.touch(inst.id());
    out.state.instances.insert(inst.id().to_string(), inst);
}

fn check_encodings(source: &TableInstance, encodings: &BTreeMap<crate::viz::Channel, String>) -> Result<(), ToolError> {
    match encodings.values().find(|c| source.column_index(c).is_none()) {
        Some(c) => Err(ToolError::UnknownColumn(c.clone())),
        None => Ok(()),
    }
}

/// Interprets a JSON cell value: a tagged value (`{"number": 3}`), `null`
/// for missing, or a scalar coerced to the column type.
pub fn cell_from_json(v: &Value, ty: ValueType) -> Result<CellValue, ToolError> {
    let value = match v {
        Value::Null => CellValue::Missing,
        Value::Object(_) => serde_json::from_value(v.clone()).map_err(|e| ToolError::BadArgument(format!("bad cell value {v}: {e}")))?,
        scalar => coerce_operand(scalar, ty).ok_or_else(|| ToolError::TypeMismatch(format!("{scalar} does not fit a {ty} column")))?,
    };
    match value.value_type() {
        Some(t) if t != ty => Err(ToolError::TypeMismatch(format!("{t} value in a {ty} column"))),
        _ => Ok(value),
    }
}

fn update_instance(out: &mut ToolOutcome, a: &UpdateInstanceArgs) -> Result<(), ToolError> {
    if let Ok(viz) = out.state.viz(&a.instance_id) {
        if a.new_instance.is_some() || !a.add_columns.is_empty() || !a.edits.is_empty() {
            return Err(ToolError::WrongKind(a.instance_id.clone(), "table"));
        }
        let mut viz = viz.clone();
        if let Some(n) = &a.new_name {
            viz.name = n.clone();
        }
        replace_viz(out, viz);
        return Ok(());
    }
    let mut t = out.state.table(&a.instance_id)?.clone();
    if let Some(new) = &a.new_instance {
        let lineage = std::mem::take(&mut t.lineage);
        t = new.clone();
        t.id = a.instance_id.clone();
        t.lineage = lineage;
    }
    if let Some(n) = &a.new_name {
        if n.trim().is_empty() {
            return Err(ToolError::BadArgument("name must not be empty".into()));
        }
        t.name = n.clone();
    }
    for c in &a.add_columns {
        t.columns.push(c.clone());
        for row in &mut t.rows {
            row.push(Cell::missing());
        }
    }
    for e in &a.edits {
        let col = super::require_column(&t, &e.column)?;
        if e.row > t.row_count() {
            return Err(ToolError::BadArgument(format!("row {} is past the end ({} rows)", e.row, t.row_count())));
        }
        if e.row == t.row_count() {
            t.rows.push(vec![Cell::missing(); t.columns.len()]);
        }
        let value = cell_from_json(&e.value, t.columns[col].declared_type)?;
        t.rows[e.row][col] = Cell { value, source: e.source.clone() };
    }
    t.validate()?;
    out.report = json!({ "edits": a.edits.len() });
    replace_table(out, t);
    Ok(())
}

fn select_nodes(snap: &PageSnapshot, css: Option<&str>, node_ids: &[usize]) -> Result<Vec<usize>, ToolError> {
    if let Some(css) = css {
        return Ok(css_select(&snap.html, css, None).map_err(ExtractError::Css)?);
    }
    let sel = generalize(snap, node_ids)?;
    Ok(match_nodes(&snap.dom, &sel.path_pattern))
}

fn generalize(snap: &PageSnapshot, node_ids: &[usize]) -> Result<crate::extract::GeneralizedSelector, ToolError> {
    let exemplars = node_ids.iter().map(|&n| ElementSelection::new(snap, n)).collect::<Result<Vec<_>, _>>()?;
    Ok(generalize_selection(snap, &exemplars)?)
}

/// Node of `snap` a source reference points at, following page changes.
fn node_in(snap: &PageSnapshot, store: &SnapshotStore, src: &SourceRef) -> Option<usize> {
    if src.snapshot_id == snap.snapshot_id {
        return Some(src.node_id);
    }
    if src.url != snap.url {
        return None;
    }
    trace_source(store, src).ok().filter(|r| r.snapshot_id == snap.snapshot_id).map(|r| r.node_id)
}

/// Record container of each row, found from the row's captured cells.
fn row_containers(t: &TableInstance, snap: &PageSnapshot, store: &SnapshotStore, containers: &HashSet<usize>) -> Vec<Option<usize>> {
    t.rows
        .iter()
        .map(|row| {
            row.iter().filter_map(|c| c.source.as_ref()).filter_map(|s| node_in(snap, store, s)).find_map(|n| {
                std::iter::once(n).chain(snap.dom.ancestors(n)).find(|a| containers.contains(a))
            })
        })
        .collect()
}

/// Containers implied by a table's existing captures: the captured nodes of
/// its best-covered column are generalized as exemplars.
fn containers_from_provenance(t: &TableInstance, snap: &PageSnapshot, store: &SnapshotStore) -> Result<Vec<usize>, ToolError> {
    let groups: Vec<Vec<usize>> = (0..t.columns.len())
        .map(|c| t.rows.iter().filter_map(|r| r[c].source.as_ref()).filter_map(|s| node_in(snap, store, s)).collect())
        .collect();
    if groups.iter().all(|g| g.len() < 2) {
        return Err(ToolError::BadArgument(format!("{} has fewer than two captured cells from {}; give a pattern", t.id, snap.url)));
    }
    let containers = union_containers(snap, &groups);
    if containers.is_empty() {
        let best = groups.into_iter().max_by_key(Vec::len).unwrap_or_default();
        return Ok(generalize(snap, &best)?.containers(&snap.dom));
    }
    Ok(containers)
}

/// Resolves one output field inside a container.
enum FieldResolver {
    Path(FieldPath),
    Css(String),
}

impl FieldResolver {
    fn resolve(&self, snap: &PageSnapshot, container: usize) -> Result<Option<usize>, ToolError> {
        match self {
            FieldResolver::Path(p) => Ok(resolve_field(&snap.dom, container, p)),
            FieldResolver::Css(css) => Ok(css_select(&snap.html, css, Some(container)).map_err(ExtractError::Css)?.first().copied()),
        }
    }
}

/// Default fields over all containers, so a field absent from the first
/// record is still found; new paths slot in after their predecessor.
fn union_default_fields(snap: &PageSnapshot, containers: &[usize]) -> Vec<FieldPath> {
    let mut out: Vec<FieldPath> = Vec::new();
    for &c in containers {
        let fields = default_fields(&snap.dom, c);
        for (i, f) in fields.iter().enumerate() {
            if out.contains(f) {
                continue;
            }
            let at = match i {
                0 => 0,
                _ => out.iter().position(|p| *p == fields[i - 1]).map_or(out.len(), |p| p + 1),
            };
            out.insert(at, f.clone());
        }
    }
    out
}

fn capture(snap: &PageSnapshot, node: Option<usize>, ty: ValueType) -> Cell {
    let Some(node) = node else { return Cell::missing() };
    let Ok((value, source)) = capture_element(snap, node) else { return Cell::missing() };
    let value = match (&value, ty) {
        (CellValue::Missing, _) => CellValue::Missing,
        (v, ty) if v.value_type() == Some(ty) => value,
        (CellValue::Text(s), ValueType::Number) => parse_number(s).map(CellValue::number).unwrap_or(CellValue::Missing),
        (v, ty) => convert::convert_value(v, ty, None).unwrap_or(CellValue::Missing),
    };
    Cell { value, source: Some(source) }
}

fn extract_batch(out: &mut ToolOutcome, a: &ExtractBatchArgs, env: &ExecEnv) -> Result<(), ToolError> {
    let snap = env.snapshots.resolve(&a.page_url)?.clone();
    let mode = a.effective_mode();
    let target = match (&a.instance_id, mode) {
        (Some(id), _) => Some(out.state.table(id)?.clone()),
        (None, ExtractMode::New) => None,
        (None, _) => return Err(ToolError::BadArgument("append and addColumns need an instanceId".into())),
    };

    let pattern = a.pattern.clone().unwrap_or_default();
    let containers = if !pattern.exemplars.is_empty() {
        generalize(&snap, &pattern.exemplars)?.containers(&snap.dom)
    } else if let Some(css) = &pattern.css {
        css_select(&snap.html, css, None).map_err(ExtractError::Css)?
    } else {
        match &target {
            Some(t) => containers_from_provenance(t, &snap, env.snapshots)?,
            None => return Err(ToolError::BadArgument("a new extraction needs exemplars or a css pattern".into())),
        }
    };
    if containers.is_empty() {
        return Err(ExtractError::NoMatches.into());
    }
    let match_count = containers.len();

    let explicit: Vec<(Option<String>, FieldResolver)> = a
        .fields
        .iter()
        .map(|f| match (&f.path, &f.css) {
            (Some(p), _) => (f.name.clone(), FieldResolver::Path(p.clone())),
            (None, Some(css)) => (f.name.clone(), FieldResolver::Css(css.clone())),
            (None, None) => (f.name.clone(), FieldResolver::Path(Vec::new())),
        })
        .collect();

    match mode {
        ExtractMode::New => {
            let mut fields = explicit;
            if fields.is_empty() {
                fields = union_default_fields(&snap, &containers).into_iter().map(|p| (None, FieldResolver::Path(p))).collect();
            }
            let take: Vec<usize> = containers.iter().copied().take(a.max_items.unwrap_or(usize::MAX)).collect();
            let mut columns = Vec::new();
            for (i, (name, resolver)) in fields.iter().enumerate() {
                let path = match resolver {
                    FieldResolver::Path(p) => p.clone(),
                    FieldResolver::Css(_) => {
                        let node = take.iter().find_map(|&c| resolver.resolve(&snap, c).ok().flatten());
                        node.and_then(|n| take.iter().find_map(|&c| field_path(&snap.dom, c, n))).unwrap_or_default()
                    }
                };
                let inferred = infer_column(&snap, &take, &path, i);
                // Capture is verbatim: only images keep a non-text type here.
                let ty = if inferred.declared_type == ValueType::ImageRef { ValueType::ImageRef } else { ValueType::Text };
                columns.push(Column::new(name.clone().unwrap_or(inferred.name), ty));
            }
            crate::extract::selector::dedupe_names(&mut columns);
            let name = a.new_instance_name.clone().unwrap_or_else(|| out.state.default_name("Table"));
            let id = out.state.fresh_id(&name);
            let mut t = TableInstance::new(id.clone(), name, columns)?;
            for &c in &take {
                let row = fields
                    .iter()
                    .zip(&t.columns)
                    .map(|((_, r), col)| Ok(capture(&snap, r.resolve(&snap, c)?, col.declared_type)))
                    .collect::<Result<Vec<_>, ToolError>>()?;
                t.push_row(row)?;
            }
            out.report = json!({ "instanceId": id, "matchCount": match_count, "rowsAdded": t.row_count() });
            insert_new(out, Instance::Table(t));
        }
        ExtractMode::Append => {
            let mut t = target.expect("checked above");
            let set: HashSet<usize> = containers.iter().copied().collect();
            let owned = row_containers(&t, &snap, env.snapshots, &set);
            // Field for each existing column: named explicitly, or learned
            // from a captured cell in that column.
            let mut resolvers: Vec<Option<FieldResolver>> = (0..t.columns.len()).map(|_| None).collect();
            let named: HashMap<&str, &FieldResolver> =
                explicit.iter().filter_map(|(n, r)| n.as_deref().map(|n| (n, r))).collect();
            for (ci, col) in t.columns.iter().enumerate() {
                if let Some(r) = named.get(col.name.as_str()) {
                    resolvers[ci] = Some(match r {
                        FieldResolver::Path(p) => FieldResolver::Path(p.clone()),
                        FieldResolver::Css(c) => FieldResolver::Css(c.clone()),
                    });
                    continue;
                }
                resolvers[ci] = t.rows.iter().zip(&owned).find_map(|(row, cont)| {
                    let node = node_in(&snap, env.snapshots, row[ci].source.as_ref()?)?;
                    field_path(&snap.dom, (*cont)?, node).map(FieldResolver::Path)
                });
            }
            let have: HashSet<usize> = owned.iter().flatten().copied().collect();
            let mut added = 0;
            for &c in containers.iter().filter(|c| !have.contains(c)).take(a.max_items.unwrap_or(usize::MAX)) {
                let row = resolvers
                    .iter()
                    .zip(&t.columns)
                    .map(|(r, col)| {
                        Ok(match r {
                            Some(r) => capture(&snap, r.resolve(&snap, c)?, col.declared_type),
                            None => Cell::missing(),
                        })
                    })
                    .collect::<Result<Vec<_>, ToolError>>()?;
                t.push_row(row)?;
                added += 1;
            }
            out.report = json!({ "instanceId": t.id, "matchCount": match_count, "rowsAdded": added });
            replace_table(out, t);
        }
        ExtractMode::AddColumns => {
            if explicit.is_empty() {
                return Err(ToolError::BadArgument("addColumns needs at least one field".into()));
            }
            let mut t = target.expect("checked above");
            let set: HashSet<usize> = containers.iter().copied().collect();
            let owned = row_containers(&t, &snap, env.snapshots, &set);
            let rows_with: Vec<usize> = owned.iter().flatten().copied().collect();
            let mut new_cols = Vec::new();
            for (i, (name, resolver)) in explicit.iter().enumerate() {
                let node = rows_with.iter().find_map(|&c| resolver.resolve(&snap, c).ok().flatten());
                let col_name = match (name, node) {
                    (Some(n), _) => n.clone(),
                    (None, Some(n)) => field_name(&snap.dom, n).unwrap_or_else(|| format!("Column {}", t.columns.len() + i + 1)),
                    (None, None) => format!("Column {}", t.columns.len() + i + 1),
                };
                let ty = if node.is_some_and(|n| snap.dom.tag(n) == Some("img")) { ValueType::ImageRef } else { ValueType::Text };
                new_cols.push(Column::new(col_name, ty));
            }
            let taken: BTreeSet<String> = t.columns.iter().map(|c| c.name.clone()).collect();
            if let Some(dup) = new_cols.iter().find(|c| taken.contains(&c.name)) {
                return Err(ToolError::Schema(format!("duplicate column name {:?}", dup.name)));
            }
            for (ri, cont) in owned.iter().enumerate() {
                for ((_, resolver), col) in explicit.iter().zip(&new_cols) {
                    let cell = match cont {
                        Some(c) => capture(&snap, resolver.resolve(&snap, *c)?, col.declared_type),
                        None => Cell::missing(),
                    };
                    t.rows[ri].push(cell);
                }
            }
            t.columns.extend(new_cols);
            t.validate()?;
            out.report = json!({ "instanceId": t.id, "matchCount": match_count, "rowsMatched": rows_with.len() });
            replace_table(out, t);
        }
    }
    Ok(())
}

/// Renames default-named columns from the page elements their cells were
/// captured from. Types are reported as proposals and not applied.
fn infer_schema(out: &mut ToolOutcome, a: &InferSchemaArgs, env: &ExecEnv) -> Result<(), ToolError> {
    let mut t = out.state.table(&a.instance_id)?.clone();
    let defaults = t.default_named_columns();
    if defaults.is_empty() {
        return Err(ToolError::BadArgument(format!("{} has no default column headers", t.id)));
    }
    let mut proposals = Vec::new();
    for ci in defaults {
        let name = t.rows.iter().filter_map(|r| r[ci].source.as_ref()).find_map(|s| {
            let snap = env.snapshots.get(&s.snapshot_id)?;
            field_name(&snap.dom, s.node_id)
        });
        let present: Vec<&CellValue> = t.column_values(ci).filter(|v| !v.is_missing()).collect();
        let proposed_type = if !present.is_empty() && present.iter().all(|v| v.as_text().is_some_and(|s| parse_number(s).is_some())) {
            ValueType::Number
        } else {
            t.columns[ci].declared_type
        };
        if let Some(mut name) = name {
            let base = name.clone();
            let mut k = 2;
            while t.columns.iter().enumerate().any(|(j, c)| j != ci && c.name == name) {
                name = format!("{base} {k}");
                k += 1;
            }
            proposals.push(json!({ "column": t.columns[ci].name, "name": name, "type": proposed_type }));
            t.columns[ci].name = name;
        }
    }
    out.report = json!({ "renamed": proposals });
    replace_table(out, t);
    Ok(())
}
