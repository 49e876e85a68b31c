use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{require_column, ToolError};
use crate::table::{Cell, Column, TableInstance};
use crate::value::{CellValue, ValueType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFn {
    Sum,
    Mean,
    Min,
    Max,
    Count,
}

impl AggFn {
    fn as_str(self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Mean => "mean",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Count => "count",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregation {
    pub column: String,
    #[serde(rename = "fn")]
    pub func: AggFn,
}

/// Output column name for one aggregation, e.g. `sum(Price)`.
pub fn aggregation_name(a: &Aggregation) -> String {
    format!("{}({})", a.func.as_str(), a.column)
}

/// Groups rows by the key columns (missing is its own key) and reduces each
/// aggregation over the group's non-missing values. Groups appear in order of
/// first occurrence. Without key columns the whole table is one group.
pub fn aggregate(t: &TableInstance, group_by: &[String], aggregations: &[Aggregation]) -> Result<TableInstance, ToolError> {
    if aggregations.is_empty() && group_by.is_empty() {
        return Err(ToolError::BadArgument("nothing to group or aggregate".into()));
    }
    let keys = group_by.iter().map(|c| require_column(t, c)).collect::<Result<Vec<_>, _>>()?;
    let mut targets = Vec::new();
    for a in aggregations {
        let c = require_column(t, &a.column)?;
        let ty = t.columns[c].declared_type;
        if a.func != AggFn::Count && ty != ValueType::Number {
            return Err(ToolError::TypeMismatch(format!("{} needs a number column, {:?} is {ty}", a.func.as_str(), a.column)));
        }
        targets.push(c);
    }

    let mut columns: Vec<Column> = keys.iter().map(|&k| t.columns[k].clone()).collect();
    for a in aggregations {
        let name = aggregation_name(a);
        if columns.iter().any(|c| c.name == name) {
            return Err(ToolError::BadArgument(format!("duplicate output column {name:?}")));
        }
        columns.push(Column::new(name, ValueType::Number));
    }

    let mut order: Vec<usize> = Vec::new();
    let mut groups: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    for (i, row) in t.rows.iter().enumerate() {
        let key: Vec<String> = keys.iter().map(|&k| row[k].value.group_key()).collect();
        let members = groups.entry(key).or_default();
        if members.is_empty() {
            order.push(i);
        }
        members.push(i);
    }
    if keys.is_empty() && order.is_empty() {
        order.push(usize::MAX);
        groups.insert(Vec::new(), Vec::new());
    }

    let mut rows = Vec::with_capacity(order.len());
    for first in order {
        let key: Vec<String> = if first == usize::MAX {
            Vec::new()
        } else {
            keys.iter().map(|&k| t.rows[first][k].value.group_key()).collect()
        };
        let members = &groups[&key];
        let mut row: Vec<Cell> = keys.iter().map(|&k| t.rows[first][k].clone()).collect();
        for (a, &c) in aggregations.iter().zip(&targets) {
            let present: Vec<&CellValue> = members.iter().map(|&r| &t.rows[r][c].value).filter(|v| !v.is_missing()).collect();
            let nums: Vec<f64> = present.iter().filter_map(|v| v.as_number()).collect();
            let v = match a.func {
                AggFn::Count => CellValue::number(present.len() as f64),
                AggFn::Sum => CellValue::number(nums.iter().sum()),
                AggFn::Mean if nums.is_empty() => CellValue::Missing,
                AggFn::Mean => CellValue::number(nums.iter().sum::<f64>() / nums.len() as f64),
                AggFn::Min => nums.iter().copied().reduce(f64::min).map_or(CellValue::Missing, CellValue::number),
                AggFn::Max => nums.iter().copied().reduce(f64::max).map_or(CellValue::Missing, CellValue::number),
            };
            row.push(Cell::new(v));
        }
        rows.push(row);
    }
    let mut out = t.clone();
    out.columns = columns;
    out.rows = rows;
    Ok(out)
}
