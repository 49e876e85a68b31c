//! The tool catalog: typed arguments for every tool and the wire form of a
//! tool call (`{"callId", "tool", "args"}`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::aggregate::Aggregation;
use super::fill::FillStrategy;
use super::filter::{BoolOp, FilterCondition};
use super::format::FormatPattern;
use super::merge::MergeStrategy;
use super::positional::PositionalOp;
use super::reshape::ReshapeDirection;
use super::sort::SortOrder;
use super::ToolError;
use crate::extract::FieldPath;
use crate::table::{Column, SourceRef, TableInstance};
use crate::value::ValueType;
use crate::viz::{Channel, ChartType, Interaction};
use crate::workspace::Instance;

/// Names accepted in the `tool` field, in catalog order.
pub const CATALOG: &[&str] = &[
    "openPage",
    "selectElements",
    "inferSchema",
    "extractBatch",
    "updateInstance",
    "addComputedColumn",
    "tableSort",
    "tableFilter",
    "mergeInstances",
    "renameColumn",
    "formatColumn",
    "searchAndReplace",
    "convertColumnType",
    "fillMissingValues",
    "createVisualization",
    "updateVisualization",
    "reshape",
    "aggregate",
    "positionalTransform",
    "createInstance",
    "defineRule",
    "applyRule",
];

/// Placeholder for the target instance inside rule steps.
pub const RULE_TARGET: &str = "$instance";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OpenPageArgs {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SelectElementsArgs {
    /// Page URL or snapshot id.
    pub page_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub node_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct InferSchemaArgs {
    pub instance_id: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractMode {
    /// Create a new table.
    New,
    /// Add rows for records not yet in the table.
    Append,
    /// Add columns to existing rows, matched by record container.
    #[serde(alias = "addColumns")]
    AddColumns,
}

/// How record containers are found. Exactly one of the fields is used, in
/// the order listed; with neither, containers come from the provenance of
/// the target table's captured cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PatternSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exemplars: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub css: Option<String>,
}

/// One output column: a relative CSS selector or a relative path from the
/// record container. With neither, the container itself is captured.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub css: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<FieldPath>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExtractBatchArgs {
    /// Page URL or snapshot id.
    pub page_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_items: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ExtractMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_instance_name: Option<String>,
}

impl ExtractBatchArgs {
    pub fn effective_mode(&self) -> ExtractMode {
        self.mode.unwrap_or(if self.instance_id.is_some() { ExtractMode::Append } else { ExtractMode::New })
    }
}

/// A single cell write. `row == row count` appends a row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CellEdit {
    pub row: usize,
    pub column: String,
    /// Either a tagged cell value (`{"number": 3}`), a plain JSON scalar
    /// coerced to the column type, or `null` for missing.
    pub value: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UpdateInstanceArgs {
    pub instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub add_columns: Vec<Column>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edits: Vec<CellEdit>,
    /// Whole-content replacement; id and lineage are kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_instance: Option<TableInstance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AddComputedColumnArgs {
    pub instance_id: String,
    pub formula: String,
    pub new_column_name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TableSortArgs {
    pub instance_id: String,
    pub column_name: String,
    pub order: SortOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TableFilterArgs {
    pub instance_id: String,
    pub conditions: Vec<FilterCondition>,
    #[serde(default)]
    pub operator: BoolOp,
    /// Attach the filter to this visualization instead of dropping rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visualization_id: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MergeInstancesArgs {
    pub source_instance_ids: Vec<String>,
    pub merge_strategy: MergeStrategy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub join_columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_instance_name: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fold_text_keys: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RenameColumnArgs {
    pub instance_id: String,
    pub old_column_name: String,
    pub new_column_name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FormatColumnArgs {
    pub instance_id: String,
    #[serde(alias = "columnName")]
    pub old_column_name: String,
    pub format_pattern: FormatPattern,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SearchAndReplaceArgs {
    pub instance_id: String,
    pub search_pattern: String,
    pub replace_with: String,
    /// Restrict to one column; the whole table otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_name: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_regex: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConvertColumnTypeArgs {
    pub instance_id: String,
    pub column_name: String,
    pub target_type: ValueType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cleaning_pattern: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FillMissingValuesArgs {
    pub instance_id: String,
    pub column_name: String,
    pub strategy: FillStrategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateVisualizationArgs {
    pub source_instance_id: String,
    pub chart_type: ChartType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_instance_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interactions: Option<BTreeSet<Interaction>>,
}

impl CreateVisualizationArgs {
    pub fn encodings(&self) -> BTreeMap<Channel, String> {
        [(Channel::X, &self.x_axis), (Channel::Y, &self.y_axis), (Channel::Color, &self.color), (Channel::Size, &self.size)]
            .into_iter()
            .filter_map(|(ch, c)| c.clone().map(|c| (ch, c)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UpdateVisualizationArgs {
    pub visualization_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_type: Option<ChartType>,
    /// Replaces the whole encoding map when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encodings: Option<BTreeMap<Channel, String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ReshapeArgs {
    pub instance_id: String,
    pub direction: ReshapeDirection,
    #[serde(default)]
    pub key_columns: Vec<String>,
    pub value_columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AggregateArgs {
    pub instance_id: String,
    #[serde(default)]
    pub group_by: Vec<String>,
    pub aggregations: Vec<Aggregation>,
    /// Write the result to a new table instead of replacing the source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_instance_name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PositionalTransformArgs {
    pub instance_id: String,
    pub op: PositionalOp,
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateInstanceArgs {
    pub instance: Instance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DefineRuleArgs {
    pub name: String,
    /// Steps whose instance arguments use the `$instance` placeholder.
    pub steps: Vec<ToolCall>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ApplyRuleArgs {
    pub rule_name: String,
    pub instance_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tool", content = "args", rename_all = "camelCase")]
pub enum Tool {
    OpenPage(OpenPageArgs),
    SelectElements(SelectElementsArgs),
    InferSchema(InferSchemaArgs),
    ExtractBatch(ExtractBatchArgs),
    UpdateInstance(UpdateInstanceArgs),
    AddComputedColumn(AddComputedColumnArgs),
    TableSort(TableSortArgs),
    TableFilter(TableFilterArgs),
    MergeInstances(MergeInstancesArgs),
    RenameColumn(RenameColumnArgs),
    FormatColumn(FormatColumnArgs),
    SearchAndReplace(SearchAndReplaceArgs),
    ConvertColumnType(ConvertColumnTypeArgs),
    FillMissingValues(FillMissingValuesArgs),
    CreateVisualization(CreateVisualizationArgs),
    UpdateVisualization(UpdateVisualizationArgs),
    Reshape(ReshapeArgs),
    Aggregate(AggregateArgs),
    PositionalTransform(PositionalTransformArgs),
    CreateInstance(CreateInstanceArgs),
    DefineRule(DefineRuleArgs),
    ApplyRule(ApplyRuleArgs),
}

impl Tool {
    /// Parses a tool from its wire name and argument object.
    pub fn parse(name: &str, args: Value) -> Result<Tool, ToolError> {
        if !CATALOG.contains(&name) {
            return Err(ToolError::UnknownTool(name.to_string()));
        }
        serde_json::from_value(json!({ "tool": name, "args": args }))
            .map_err(|e| ToolError::BadArgument(format!("{name}: {e}")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tool::OpenPage(_) => "openPage",
            Tool::SelectElements(_) => "selectElements",
            Tool::InferSchema(_) => "inferSchema",
            Tool::ExtractBatch(_) => "extractBatch",
            Tool::UpdateInstance(_) => "updateInstance",
            Tool::AddComputedColumn(_) => "addComputedColumn",
            Tool::TableSort(_) => "tableSort",
            Tool::TableFilter(_) => "tableFilter",
            Tool::MergeInstances(_) => "mergeInstances",
            Tool::RenameColumn(_) => "renameColumn",
            Tool::FormatColumn(_) => "formatColumn",
            Tool::SearchAndReplace(_) => "searchAndReplace",
            Tool::ConvertColumnType(_) => "convertColumnType",
            Tool::FillMissingValues(_) => "fillMissingValues",
            Tool::CreateVisualization(_) => "createVisualization",
            Tool::UpdateVisualization(_) => "updateVisualization",
            Tool::Reshape(_) => "reshape",
            Tool::Aggregate(_) => "aggregate",
            Tool::PositionalTransform(_) => "positionalTransform",
            Tool::CreateInstance(_) => "createInstance",
            Tool::DefineRule(_) => "defineRule",
            Tool::ApplyRule(_) => "applyRule",
        }
    }

    pub fn args(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("tool arguments serialize");
        v.get_mut("args").map(Value::take).unwrap_or(Value::Null)
    }

    /// Instances this call reads or writes, as named in its arguments.
    pub fn referenced_instances(&self) -> Vec<String> {
        let mut out: Vec<String> = match self {
            Tool::OpenPage(_) | Tool::SelectElements(_) | Tool::DefineRule(_) => Vec::new(),
            Tool::InferSchema(a) => vec![a.instance_id.clone()],
            Tool::ExtractBatch(a) => a.instance_id.iter().cloned().collect(),
            Tool::UpdateInstance(a) => vec![a.instance_id.clone()],
            Tool::AddComputedColumn(a) => vec![a.instance_id.clone()],
            Tool::TableSort(a) => vec![a.instance_id.clone()],
            Tool::TableFilter(a) => std::iter::once(a.instance_id.clone()).chain(a.visualization_id.clone()).collect(),
            Tool::MergeInstances(a) => a.source_instance_ids.clone(),
            Tool::RenameColumn(a) => vec![a.instance_id.clone()],
            Tool::FormatColumn(a) => vec![a.instance_id.clone()],
            Tool::SearchAndReplace(a) => vec![a.instance_id.clone()],
            Tool::ConvertColumnType(a) => vec![a.instance_id.clone()],
            Tool::FillMissingValues(a) => vec![a.instance_id.clone()],
            Tool::CreateVisualization(a) => vec![a.source_instance_id.clone()],
            Tool::UpdateVisualization(a) => vec![a.visualization_id.clone()],
            Tool::Reshape(a) => vec![a.instance_id.clone()],
            Tool::Aggregate(a) => vec![a.instance_id.clone()],
            Tool::PositionalTransform(a) => vec![a.instance_id.clone()],
            Tool::CreateInstance(_) => Vec::new(),
            Tool::ApplyRule(a) => vec![a.instance_id.clone()],
        };
        out.dedup();
        out
    }

    /// One-line human description used for rendered plan steps.
    pub fn describe(&self) -> String {
        match self {
            Tool::OpenPage(a) => match &a.description {
                Some(d) => format!("Open {} ({d})", a.url),
                None => format!("Open {}", a.url),
            },
            Tool::SelectElements(a) => match &a.selector {
                Some(css) => format!("Select elements matching '{css}' on {}", a.page_url),
                None => format!("Select all elements similar to the {} chosen on {}", a.node_ids.len(), a.page_url),
            },
            Tool::InferSchema(a) => format!("Fill in column headers for {}", a.instance_id),
            Tool::ExtractBatch(a) => {
                let limit = a.max_items.map(|m| format!(" (at most {m})")).unwrap_or_default();
                match (a.effective_mode(), &a.instance_id) {
                    (ExtractMode::Append, Some(id)) => format!("Extract the remaining items from {} into {id}{limit}", a.page_url),
                    (ExtractMode::AddColumns, Some(id)) => {
                        let names: Vec<String> = a.fields.iter().filter_map(|f| f.name.clone()).map(|n| format!("'{n}'")).collect();
                        format!("Add columns {} to {id} from {}", names.join(", "), a.page_url)
                    }
                    _ => format!(
                        "Extract items from {} into a new table{}{limit}",
                        a.page_url,
                        a.new_instance_name.as_ref().map(|n| format!(" '{n}'")).unwrap_or_default()
                    ),
                }
            }
            Tool::UpdateInstance(a) => {
                let mut parts = Vec::new();
                if let Some(n) = &a.new_name {
                    parts.push(format!("rename it to '{n}'"));
                }
                if !a.add_columns.is_empty() {
                    parts.push(format!("add {} column(s)", a.add_columns.len()));
                }
                if !a.edits.is_empty() {
                    parts.push(format!("fill {} cell(s)", a.edits.len()));
                }
                if a.new_instance.is_some() {
                    parts.push("replace its contents".into());
                }
                format!("Update {}: {}", a.instance_id, parts.join(", "))
            }
            Tool::AddComputedColumn(a) => format!("Add column '{}' = {} to {}", a.new_column_name, a.formula, a.instance_id),
            Tool::TableSort(a) => format!("Sort {} by '{}' ({})", a.instance_id, a.column_name, if a.order == SortOrder::Asc { "ascending" } else { "descending" }),
            Tool::TableFilter(a) => {
                let conds: Vec<String> = a.conditions.iter().map(|c| format!("'{}' {:?} {}", c.column, c.comparator, c.operand)).collect();
                let joined = conds.join(if a.operator == BoolOp::And { " and " } else { " or " });
                match &a.visualization_id {
                    Some(v) => format!("Add an interactive filter to {v}: {joined}"),
                    None => format!("Filter {} to rows where {joined}", a.instance_id),
                }
            }
            Tool::MergeInstances(a) => {
                let what = match a.merge_strategy {
                    MergeStrategy::Union => "Union",
                    MergeStrategy::Inner => "Inner join",
                    MergeStrategy::Left => "Left join",
                    MergeStrategy::Right => "Right join",
                };
                let mut s = format!("{what} {}", a.source_instance_ids.join(" and "));
                if a.merge_strategy != MergeStrategy::Union {
                    let _ = write!(s, " on {}", a.join_columns.iter().map(|c| format!("'{c}'")).collect::<Vec<_>>().join(" = "));
                }
                if let Some(n) = &a.new_instance_name {
                    let _ = write!(s, " into '{n}'");
                }
                s
            }
            Tool::RenameColumn(a) => format!("Rename column '{}' to '{}' in {}", a.old_column_name, a.new_column_name, a.instance_id),
            Tool::FormatColumn(a) => format!("Format '{}' in {} as {}", a.old_column_name, a.instance_id, a.format_pattern),
            Tool::SearchAndReplace(a) => {
                let scope = a.column_name.as_ref().map(|c| format!(" column '{c}'")).unwrap_or_default();
                format!("Replace '{}' with '{}' in {}{scope}", a.search_pattern, a.replace_with, a.instance_id)
            }
            Tool::ConvertColumnType(a) => format!("Convert '{}' in {} to a {}", a.column_name, a.instance_id, a.target_type),
            Tool::FillMissingValues(a) => {
                let how = match (&a.strategy, &a.constant) {
                    (FillStrategy::Constant, Some(c)) => format!("the constant {c}"),
                    (FillStrategy::Mean, _) => "the column average".into(),
                    (s, _) => format!("the column {}", format!("{s:?}").to_lowercase()),
                };
                format!("Fill missing values in '{}' of {} using {how}", a.column_name, a.instance_id)
            }
            Tool::CreateVisualization(a) => {
                let enc: Vec<String> = a.encodings().iter().map(|(ch, c)| format!("{}='{c}'", ch.as_str())).collect();
                format!("Create a {} chart of {} ({})", a.chart_type.as_str(), a.source_instance_id, enc.join(", "))
            }
            Tool::UpdateVisualization(a) => {
                let mut parts = Vec::new();
                if let Some(c) = a.chart_type {
                    parts.push(format!("switch to a {} chart", c.as_str()));
                }
                if let Some(e) = &a.encodings {
                    let enc: Vec<String> = e.iter().map(|(ch, c)| format!("{}='{c}'", ch.as_str())).collect();
                    parts.push(format!("encode {}", enc.join(", ")));
                }
                format!("Update {}: {}", a.visualization_id, parts.join(", "))
            }
            Tool::Reshape(a) => format!(
                "{} {} columns {} of {}",
                if a.direction == ReshapeDirection::Fold { "Fold" } else { "Unfold" },
                a.value_columns.len(),
                a.value_columns.iter().map(|c| format!("'{c}'")).collect::<Vec<_>>().join(", "),
                a.instance_id
            ),
            Tool::Aggregate(a) => {
                let aggs: Vec<String> = a.aggregations.iter().map(super::aggregate::aggregation_name).collect();
                if a.group_by.is_empty() {
                    format!("Summarize {}: {}", a.instance_id, aggs.join(", "))
                } else {
                    format!("Group {} by {} computing {}", a.instance_id, a.group_by.join(", "), aggs.join(", "))
                }
            }
            Tool::PositionalTransform(a) => match a.op {
                PositionalOp::DeleteRows => format!("Delete {} row(s) from {}", a.indices.len(), a.instance_id),
                PositionalOp::DeleteCols => format!("Delete {} column(s) from {}", a.indices.len(), a.instance_id),
                PositionalOp::MoveCol => format!("Move a column of {}", a.instance_id),
            },
            Tool::CreateInstance(a) => match &a.instance {
                Instance::Table(t) => format!("Create table '{}'", t.name),
                Instance::Visualization(v) => format!("Create visualization '{}'", v.name),
            },
            Tool::DefineRule(a) => format!("Save a reusable rule '{}' ({} step(s))", a.name, a.steps.len()),
            Tool::ApplyRule(a) => format!("Apply rule '{}' to {}", a.rule_name, a.instance_id),
        }
    }
}

/// One validated invocation of a catalog tool.
#[derive(Clone, Debug, PartialEq)]
pub struct ToolCall {
    pub call_id: String,
    pub tool: Tool,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawToolCall {
    #[serde(default)]
    call_id: String,
    tool: String,
    #[serde(default)]
    args: Value,
}

impl Serialize for ToolCall {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawToolCall { call_id: self.call_id.clone(), tool: self.tool.name().to_string(), args: self.tool.args() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ToolCall {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawToolCall::deserialize(d)?;
        let tool = Tool::parse(&raw.tool, raw.args).map_err(serde::de::Error::custom)?;
        Ok(ToolCall { call_id: raw.call_id, tool })
    }
}

impl ToolCall {
    pub fn new(call_id: impl Into<String>, tool: Tool) -> Self {
        Self { call_id: call_id.into(), tool }
    }

    /// Builds a call from a wire name and JSON arguments.
    pub fn parse(call_id: impl Into<String>, name: &str, args: Value) -> Result<Self, ToolError> {
        Ok(Self { call_id: call_id.into(), tool: Tool::parse(name, args)? })
    }

    pub fn describe(&self) -> String {
        self.tool.describe()
    }

    /// Copy with every `$instance` string argument replaced by `target`.
    pub fn bind_rule_target(&self, target: &str) -> Result<ToolCall, ToolError> {
        fn walk(v: &mut Value, target: &str) {
            match v {
                Value::String(s) if s == RULE_TARGET => *s = target.to_string(),
                Value::Array(items) => items.iter_mut().for_each(|i| walk(i, target)),
                Value::Object(map) => map.values_mut().for_each(|i| walk(i, target)),
                _ => {}
            }
        }
        let mut args = self.tool.args();
        walk(&mut args, target);
        ToolCall::parse(self.call_id.clone(), self.tool.name(), args)
    }
}

/// An ordered list of tool calls offered or executed as one unit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToolPlan {
    pub steps: Vec<ToolCall>,
    pub rendered_steps: Vec<String>,
}

impl ToolPlan {
    pub fn new(steps: Vec<ToolCall>) -> Self {
        let rendered_steps = steps.iter().enumerate().map(|(i, s)| format!("Step {}: {}.", i + 1, s.describe())).collect();
        Self { steps, rendered_steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_round_trip() {
        let call = ToolCall::parse("c1", "tableSort", json!({"instanceId": "T1", "columnName": "Price", "order": "asc"})).unwrap();
        let text = serde_json::to_string(&call).unwrap();
        assert_eq!(text, r#"{"callId":"c1","tool":"tableSort","args":{"columnName":"Price","instanceId":"T1","order":"asc"}}"#);
        let back: ToolCall = serde_json::from_str(&text).unwrap();
        assert_eq!(back, call);
    }

    #[test]
    fn unknown_tool_and_missing_args() {
        assert!(matches!(Tool::parse("frobnicate", json!({})), Err(ToolError::UnknownTool(_))));
        match Tool::parse("tableSort", json!({"instanceId": "T1"})) {
            Err(ToolError::BadArgument(m)) => assert!(m.contains("columnName"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(Tool::parse("tableSort", json!({"instanceId": "T1", "columnName": "a", "order": "up"})).is_err());
        assert!(Tool::parse("tableSort", json!({"instanceId": "T1", "columnName": "a", "order": "asc", "extra": 1})).is_err());
    }

    #[test]
    fn every_catalog_name_maps_to_a_variant() {
        for name in CATALOG {
            match Tool::parse(name, json!({})) {
                Err(ToolError::BadArgument(_)) => {}
                other => panic!("{name}: {other:?}"),
            }
        }
    }

    #[test]
    fn rendered_steps() {
        let plan = ToolPlan::new(vec![
            ToolCall::parse("a", "convertColumnType", json!({"instanceId": "T1", "columnName": "Price", "targetType": "number"})).unwrap(),
            ToolCall::parse("b", "createVisualization", json!({"sourceInstanceId": "T1", "chartType": "bar", "xAxis": "Brand", "yAxis": "Price"})).unwrap(),
        ]);
        assert_eq!(plan.rendered_steps[0], "Step 1: Convert 'Price' in T1 to a number.");
        assert_eq!(plan.rendered_steps[1], "Step 2: Create a bar chart of T1 (x='Brand', y='Price').");
    }

    #[test]
    fn rule_binding() {
        let step = ToolCall::parse("s", "tableSort", json!({"instanceId": RULE_TARGET, "columnName": "Price", "order": "desc"})).unwrap();
        let bound = step.bind_rule_target("T9").unwrap();
        assert_eq!(bound.tool.referenced_instances(), vec!["T9".to_string()]);
    }
}
