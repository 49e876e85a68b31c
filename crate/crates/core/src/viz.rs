//! Visualization instances and their Vega-Lite rendering.
//!
//! A visualization is live-linked to its source table: the chart spec is
//! always produced from the current table contents, never from a copy.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::table::{LineageRef, TableInstance};
use crate::transform::filter::{BoolOp, Comparator, FilterCondition};
use crate::value::{CellValue, ValueType};

pub const VEGA_LITE_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartType {
    Bar,
    Line,
    Scatter,
    Histogram,
}

impl ChartType {
    pub fn as_str(self) -> &'static str {
        match self {
            ChartType::Bar => "bar",
            ChartType::Line => "line",
            ChartType::Scatter => "scatter",
            ChartType::Histogram => "histogram",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    X,
    Y,
    Color,
    Size,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Color => "color",
            Channel::Size => "size",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interaction {
    ZoomPan,
    Tooltip,
    Filter,
}

impl Interaction {
    pub fn all() -> BTreeSet<Interaction> {
        [Interaction::ZoomPan, Interaction::Tooltip, Interaction::Filter].into_iter().collect()
    }
}

/// An interactive filter attached to a visualization. The source table is
/// left untouched; rows are filtered at render time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VizFilter {
    pub conditions: Vec<FilterCondition>,
    pub operator: BoolOp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualizationInstance {
    pub id: String,
    pub name: String,
    pub source_instance_id: String,
    pub chart_type: ChartType,
    pub encodings: BTreeMap<Channel, String>,
    pub interactions: BTreeSet<Interaction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<VizFilter>,
    #[serde(default)]
    pub lineage: Vec<LineageRef>,
}

impl VisualizationInstance {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        source_instance_id: impl Into<String>,
        chart_type: ChartType,
        encodings: BTreeMap<Channel, String>,
    ) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            source_instance_id: source_instance_id.into(),
            chart_type,
            encodings,
            interactions: Interaction::all(),
            filter: None,
            lineage: Vec::new(),
        }
    }

    /// Encoded columns that no longer exist in the source table. A non-empty
    /// result marks the visualization invalid.
    pub fn missing_columns(&self, source: &TableInstance) -> Vec<String> {
        let mut missing: Vec<String> = self
            .encodings
            .values()
            .filter(|c| source.column_index(c).is_none())
            .cloned()
            .collect();
        missing.sort();
        missing.dedup();
        missing
    }

    pub fn encoded(&self, channel: Channel) -> Option<&str> {
        self.encodings.get(&channel).map(String::as_str)
    }

    /// Renders the Vega-Lite spec against the live source table.
    /// Returns the list of missing columns when the encoding is stale.
    pub fn to_vega_lite(&self, source: &TableInstance) -> Result<Value, Vec<String>> {
        let missing = self.missing_columns(source);
        if !missing.is_empty() {
            return Err(missing);
        }

        let values: Vec<Value> = source
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut obj = Map::new();
                obj.insert("_row".into(), json!(i));
                for (col, cell) in source.columns.iter().zip(row) {
                    obj.insert(col.name.clone(), cell_json(&cell.value));
                }
                Value::Object(obj)
            })
            .collect();

        let mark = match self.chart_type {
            ChartType::Bar | ChartType::Histogram => "bar",
            ChartType::Line => "line",
            ChartType::Scatter => "point",
        };
        let mut mark_obj = Map::new();
        mark_obj.insert("type".into(), json!(mark));
        if self.interactions.contains(&Interaction::Tooltip) {
            mark_obj.insert("tooltip".into(), json!(true));
        }

        let mut encoding = Map::new();
        for (channel, field) in &self.encodings {
            let col = source.column(field).expect("checked above");
            let mut enc = Map::new();
            enc.insert("field".into(), json!(field));
            enc.insert("type".into(), json!(vega_type(col.declared_type)));
            if self.chart_type == ChartType::Histogram && *channel == Channel::X {
                enc.insert("bin".into(), json!(true));
            }
            encoding.insert(channel.as_str().into(), Value::Object(enc));
        }
        if self.chart_type == ChartType::Histogram && !self.encodings.contains_key(&Channel::Y) {
            encoding.insert("y".into(), json!({"aggregate": "count", "type": "quantitative"}));
        }

        let mut params = Vec::new();
        if self.interactions.contains(&Interaction::ZoomPan) {
            params.push(json!({"name": "zoom_pan", "select": "interval", "bind": "scales"}));
        }
        if self.interactions.contains(&Interaction::Filter) {
            let field = self.encoded(Channel::Color).or_else(|| self.encoded(Channel::X));
            if let Some(field) = field {
                params.push(json!({
                    "name": "filter_pick",
                    "select": {"type": "point", "fields": [field]},
                    "bind": "legend"
                }));
            }
        }

        let mut spec = Map::new();
        spec.insert("$schema".into(), json!(VEGA_LITE_SCHEMA));
        spec.insert("title".into(), json!(self.name));
        spec.insert("data".into(), json!({ "values": values }));
        spec.insert("mark".into(), Value::Object(mark_obj));
        spec.insert("encoding".into(), Value::Object(encoding));
        if !params.is_empty() {
            spec.insert("params".into(), Value::Array(params));
        }
        if let Some(filter) = &self.filter {
            spec.insert("transform".into(), json!([{ "filter": filter_predicate(filter) }]));
        }
        Ok(Value::Object(spec))
    }
}

fn vega_type(t: ValueType) -> &'static str {
    match t {
        ValueType::Number => "quantitative",
        ValueType::Date => "temporal",
        ValueType::Text | ValueType::Boolean | ValueType::ImageRef => "nominal",
    }
}

pub(crate) fn cell_json(v: &CellValue) -> Value {
    match v {
        CellValue::Number(n) => json!(n),
        CellValue::Boolean(b) => json!(b),
        CellValue::Missing => Value::Null,
        other => json!(other.to_string()),
    }
}

fn filter_predicate(filter: &VizFilter) -> Value {
    let preds: Vec<Value> = filter.conditions.iter().map(condition_predicate).collect();
    match filter.operator {
        BoolOp::And => json!({ "and": preds }),
        BoolOp::Or => json!({ "or": preds }),
    }
}

fn condition_predicate(c: &FilterCondition) -> Value {
    let field = &c.column;
    let quoted = field.replace('\\', "\\\\").replace('\'', "\\'");
    let operand_text = match &c.operand {
        Value::String(s) => s.replace('\\', "\\\\").replace('\'', "\\'"),
        other => other.to_string(),
    };
    match c.comparator {
        Comparator::Eq => json!({"field": field, "equal": c.operand}),
        Comparator::Neq => json!({"not": {"field": field, "equal": c.operand}}),
        Comparator::Lt => json!({"field": field, "lt": c.operand}),
        Comparator::Lte => json!({"field": field, "lte": c.operand}),
        Comparator::Gt => json!({"field": field, "gt": c.operand}),
        Comparator::Gte => json!({"field": field, "gte": c.operand}),
        Comparator::Contains => json!(format!("indexOf(datum['{quoted}'], '{operand_text}') >= 0")),
        Comparator::RegexMatch => json!(format!("test(regexp('{operand_text}'), datum['{quoted}'])")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    fn table() -> TableInstance {
        TableInstance::from_values(
            "T1",
            "T1",
            vec![
                Column::new("Brand", ValueType::Text),
                Column::new("Price", ValueType::Number),
            ],
            vec![
                vec![CellValue::text("Sony"), CellValue::number(999.0)],
                vec![CellValue::text("Canon"), CellValue::Missing],
            ],
        )
        .unwrap()
    }

    #[test]
    fn scatter_spec_carries_encodings_and_interactions() {
        let enc = BTreeMap::from([(Channel::X, "Price".to_string()), (Channel::Color, "Brand".to_string())]);
        let viz = VisualizationInstance::new("V1", "V1", "T1", ChartType::Scatter, enc);
        let spec = viz.to_vega_lite(&table()).unwrap();
        assert_eq!(spec["mark"]["type"], "point");
        assert_eq!(spec["encoding"]["x"]["field"], "Price");
        assert_eq!(spec["encoding"]["x"]["type"], "quantitative");
        assert_eq!(spec["encoding"]["color"]["type"], "nominal");
        assert_eq!(spec["data"]["values"][1]["Price"], Value::Null);
        assert_eq!(spec["params"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn stale_encoding_is_reported() {
        let enc = BTreeMap::from([(Channel::X, "Rating".to_string())]);
        let viz = VisualizationInstance::new("V1", "V1", "T1", ChartType::Bar, enc);
        assert_eq!(viz.to_vega_lite(&table()), Err(vec!["Rating".to_string()]));
    }

    #[test]
    fn histogram_bins_x_and_counts() {
        let enc = BTreeMap::from([(Channel::X, "Price".to_string())]);
        let viz = VisualizationInstance::new("V1", "V1", "T1", ChartType::Histogram, enc);
        let spec = viz.to_vega_lite(&table()).unwrap();
        assert_eq!(spec["encoding"]["x"]["bin"], true);
        assert_eq!(spec["encoding"]["y"]["aggregate"], "count");
    }
}
