//! Rule-template plans: the plan each trigger offers when no language model
//! is consulted, or when the model is unavailable.

use serde_json::json;

use super::rules::{Binding, Firing, Scope};
use crate::transform::fill::FillStrategy;
use crate::transform::format::FormatPattern;
use crate::transform::merge::MergeStrategy;
use crate::transform::positional::PositionalOp;
use crate::transform::tools::*;
use crate::transform::{Tool, ToolCall, ToolPlan};
use crate::value::ValueType;
use crate::viz::ChartType;
use crate::workspace::WorkspaceState;

fn plan(steps: Vec<Tool>) -> ToolPlan {
    ToolPlan::new(steps.into_iter().enumerate().map(|(i, t)| ToolCall::new(format!("g{}", i + 1), t)).collect())
}

fn chart_label(c: ChartType) -> &'static str {
    match c {
        ChartType::Bar => "Bar Chart",
        ChartType::Line => "Line Chart",
        ChartType::Scatter => "Scatter Plot",
        ChartType::Histogram => "Histogram",
    }
}

fn name_of(state: &WorkspaceState, id: &str) -> String {
    state.get(id).map(|i| i.name().to_string()).unwrap_or_else(|_| id.to_string())
}

/// Plan and one-line description for a firing. `ghost_rows` caps how many
/// autocomplete rows are proposed at once. `None` when the rule has nothing
/// concrete to offer.
pub fn template_plan(firing: &Firing, state: &WorkspaceState, ghost_rows: usize) -> Option<(ToolPlan, String)> {
    let micro = firing.scope == Scope::Micro;
    Some(match &firing.binding {
        Binding::Pages { title, urls } => {
            if urls.is_empty() {
                return None;
            }
            let steps = urls.iter().map(|u| Tool::OpenPage(OpenPageArgs { url: u.clone(), description: None })).collect();
            (plan(steps), format!("Open {} pages that may help with \"{title}\"?", urls.len()))
        }
        Binding::Elements { page, exemplars, matched } => {
            if micro {
                let tool = Tool::SelectElements(SelectElementsArgs { page_url: page.clone(), selector: None, node_ids: matched.clone() });
                (plan(vec![tool]), format!("Select all ({}) matching items?", matched.len()))
            } else {
                let tool = Tool::ExtractBatch(ExtractBatchArgs {
                    page_url: page.clone(),
                    pattern: Some(PatternSpec { exemplars: exemplars.clone(), css: None }),
                    fields: Vec::new(),
                    max_items: None,
                    mode: Some(ExtractMode::New),
                    instance_id: None,
                    new_instance_name: None,
                });
                (plan(vec![tool]), format!("Extract all ({}) matching items into a new table?", matched.len()))
            }
        }
        Binding::Schema { instance_id, columns } => (
            plan(vec![Tool::InferSchema(InferSchemaArgs { instance_id: instance_id.clone() })]),
            format!("Name {} untitled column{} from the page?", columns.len(), if columns.len() == 1 { "" } else { "s" }),
        ),
        Binding::Batch { instance_id, page, total, .. } => {
            let tool = Tool::ExtractBatch(ExtractBatchArgs {
                page_url: page.clone(),
                pattern: None,
                fields: Vec::new(),
                max_items: None,
                mode: Some(ExtractMode::Append),
                instance_id: Some(instance_id.clone()),
                new_instance_name: None,
            });
            (plan(vec![tool]), format!("Extract all ({total}) rows?"))
        }
        Binding::Autocomplete { instance_id, column, fills, .. } => {
            let edits: Vec<CellEdit> = fills
                .iter()
                .take(ghost_rows)
                .map(|(row, v)| CellEdit { row: *row, column: column.clone(), value: json!(v), source: None })
                .collect();
            let n = edits.len();
            let tool = Tool::UpdateInstance(UpdateInstanceArgs {
                instance_id: instance_id.clone(),
                new_name: None,
                add_columns: Vec::new(),
                edits,
                new_instance: None,
            });
            (plan(vec![tool]), format!("Fill {n} more row{} of '{column}'?", if n == 1 { "" } else { "s" }))
        }
        Binding::Computed { instance_id, formula, column, replaces_column } => {
            let mut steps = Vec::new();
            if *replaces_column {
                let idx = state.table(instance_id).ok()?.column_index(column)?;
                steps.push(Tool::PositionalTransform(PositionalTransformArgs {
                    instance_id: instance_id.clone(),
                    op: PositionalOp::DeleteCols,
                    indices: vec![idx],
                }));
            }
            steps.push(Tool::AddComputedColumn(AddComputedColumnArgs {
                instance_id: instance_id.clone(),
                formula: formula.clone(),
                new_column_name: column.clone(),
            }));
            (plan(steps), format!("Compute '{column}' as {formula} for every row?"))
        }
        Binding::Rule { name, steps, others } => {
            let mut tools = vec![Tool::DefineRule(DefineRuleArgs { name: name.clone(), steps: steps.clone() })];
            tools.extend(others.iter().map(|t| Tool::ApplyRule(ApplyRuleArgs { rule_name: name.clone(), instance_id: t.clone() })));
            let what = steps.first().map(|s| s.describe()).unwrap_or_default();
            (plan(tools), format!("Save \"{what}\" as a reusable rule '{name}'?"))
        }
        Binding::Join { tables, strategy, key, format } => {
            let mut steps: Vec<Tool> = format
                .iter()
                .map(|(t, c)| {
                    Tool::FormatColumn(FormatColumnArgs {
                        instance_id: t.clone(),
                        old_column_name: c.clone(),
                        format_pattern: FormatPattern::Currency { default_code: "USD".into() },
                    })
                })
                .collect();
            let names: Vec<String> = tables.iter().map(|t| name_of(state, t)).collect();
            steps.push(Tool::MergeInstances(MergeInstancesArgs {
                source_instance_ids: tables.clone(),
                merge_strategy: *strategy,
                join_columns: key.iter().map(|k| vec![k.clone(); tables.len()]).next().unwrap_or_default(),
                new_instance_name: None,
                fold_text_keys: false,
            }));
            let desc = match (strategy, key) {
                (MergeStrategy::Union, _) => format!("Combine {} and {} into one table?", names[0], names[1]),
                (_, Some(k)) => format!("Join {} and {} on '{k}'?", names[0], names[1]),
                _ => format!("Join {} and {}?", names[0], names[1]),
            };
            (plan(steps), desc)
        }
        Binding::Normalize { instance_id, column, changes } => {
            let edits: Vec<CellEdit> =
                changes.iter().map(|c| CellEdit { row: c.row, column: column.clone(), value: json!(c.to), source: None }).collect();
            let n = edits.len();
            let tool = Tool::UpdateInstance(UpdateInstanceArgs {
                instance_id: instance_id.clone(),
                new_name: None,
                add_columns: Vec::new(),
                edits,
                new_instance: None,
            });
            (plan(vec![tool]), format!("Make {n} more value{} in '{column}' consistent?", if n == 1 { "" } else { "s" }))
        }
        Binding::Extraneous { instance_id, column, pattern, count } => {
            let tool = Tool::SearchAndReplace(SearchAndReplaceArgs {
                instance_id: instance_id.clone(),
                search_pattern: pattern.clone(),
                replace_with: String::new(),
                column_name: Some(column.clone()),
                is_regex: false,
            });
            (plan(vec![tool]), format!("Remove \"{pattern}\" from {count} more cell{}?", if *count == 1 { "" } else { "s" }))
        }
        Binding::FillMissing { instance_id, column, missing } => {
            let tool = Tool::FillMissingValues(FillMissingValuesArgs {
                instance_id: instance_id.clone(),
                column_name: column.clone(),
                strategy: FillStrategy::Mean,
                constant: None,
            });
            (plan(vec![tool]), format!("Fill {missing} missing values using the column average?"))
        }
        Binding::TypeFix { instance_id, column, rows } => {
            let edits: Vec<CellEdit> = rows.iter().map(|&row| CellEdit { row, column: column.clone(), value: json!("0"), source: None }).collect();
            let steps = vec![
                Tool::UpdateInstance(UpdateInstanceArgs {
                    instance_id: instance_id.clone(),
                    new_name: None,
                    add_columns: Vec::new(),
                    edits,
                    new_instance: None,
                }),
                Tool::ConvertColumnType(ConvertColumnTypeArgs {
                    instance_id: instance_id.clone(),
                    column_name: column.clone(),
                    target_type: ValueType::Number,
                    cleaning_pattern: None,
                }),
            ];
            (plan(steps), format!("Replace all {} text values with '0'?", rows.len()))
        }
        Binding::AutoViz { instance_id, x, y } => {
            let tool = Tool::CreateVisualization(CreateVisualizationArgs {
                source_instance_id: instance_id.clone(),
                chart_type: ChartType::Bar,
                x_axis: Some(x.clone()),
                y_axis: Some(y.clone()),
                color: None,
                size: None,
                new_instance_name: None,
                interactions: None,
            });
            (plan(vec![tool]), "Create a Bar Chart?".to_string())
        }
        Binding::AltChart { visualization_id, to, .. } => {
            let tool = Tool::UpdateVisualization(UpdateVisualizationArgs {
                visualization_id: visualization_id.clone(),
                chart_type: Some(*to),
                encodings: None,
            });
            (plan(vec![tool]), format!("Switch to a {}?", chart_label(*to)))
        }
        Binding::Filter { instance_id, visualization_id, conditions, operator } => {
            let tool = Tool::TableFilter(TableFilterArgs {
                instance_id: instance_id.clone(),
                conditions: conditions.clone(),
                operator: *operator,
                visualization_id: Some(visualization_id.clone()),
            });
            (plan(vec![tool]), format!("Keep this selection as a filter on {}?", name_of(state, visualization_id)))
        }
        Binding::Repair { visualization_id, missing, encodings } => {
            let tool = Tool::UpdateVisualization(UpdateVisualizationArgs {
                visualization_id: visualization_id.clone(),
                chart_type: None,
                encodings: Some(encodings.clone()),
            });
            let mapped: Vec<String> = encodings.iter().map(|(ch, c)| format!("{}={c}", ch.as_str())).collect();
            (plan(vec![tool]), format!("{} lost {}; map it as {}?", name_of(state, visualization_id), missing.join(", "), mapped.join(", ")))
        }
    })
}
