use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{require_column, ToolError};
use crate::table::{Cell, Column, TableInstance};
use crate::value::{CellValue, ValueType};

pub const VARIABLE_COLUMN: &str = "variable";
pub const VALUE_COLUMN: &str = "value";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReshapeDirection {
    Fold,
    Unfold,
}

/// Fold: `value_cols` melt into ("variable", "value") pairs, one output row
/// per (input row, value column). Unfold: `value_cols` names the
/// (variable, value) pair, which is pivoted back into one column per
/// distinct variable.
pub fn reshape(
    t: &TableInstance,
    direction: ReshapeDirection,
    key_cols: &[String],
    value_cols: &[String],
) -> Result<TableInstance, ToolError> {
    match direction {
        ReshapeDirection::Fold => fold(t, key_cols, value_cols),
        ReshapeDirection::Unfold => match value_cols {
            [var, val] => unfold(t, key_cols, var, val),
            _ => Err(ToolError::BadArgument("unfold takes exactly a (variable, value) column pair".into())),
        },
    }
}

fn fold(t: &TableInstance, key_cols: &[String], value_cols: &[String]) -> Result<TableInstance, ToolError> {
    if value_cols.is_empty() {
        return Err(ToolError::BadArgument("fold needs at least one value column".into()));
    }
    let keys = key_cols.iter().map(|c| require_column(t, c)).collect::<Result<Vec<_>, _>>()?;
    let vals = value_cols.iter().map(|c| require_column(t, c)).collect::<Result<Vec<_>, _>>()?;
    if keys.iter().any(|k| vals.contains(k)) {
        return Err(ToolError::BadArgument("a column cannot be both key and value".into()));
    }
    let ty = t.columns[vals[0]].declared_type;
    if let Some(&bad) = vals.iter().find(|&&v| t.columns[v].declared_type != ty) {
        return Err(ToolError::TypeMismatch(format!(
            "value columns must share one type: {:?} is {}, {:?} is {ty}",
            t.columns[bad].name, t.columns[bad].declared_type, t.columns[vals[0]].name
        )));
    }
    if key_cols.iter().any(|k| k == VARIABLE_COLUMN || k == VALUE_COLUMN) {
        return Err(ToolError::BadArgument(format!("key columns may not be named {VARIABLE_COLUMN:?} or {VALUE_COLUMN:?}")));
    }
    let mut columns: Vec<Column> = keys.iter().map(|&k| t.columns[k].clone()).collect();
    columns.push(Column::new(VARIABLE_COLUMN, ValueType::Text));
    columns.push(Column::new(VALUE_COLUMN, ty));
    let mut rows = Vec::with_capacity(t.row_count() * vals.len());
    for row in &t.rows {
        for &v in &vals {
            let mut out: Vec<Cell> = keys.iter().map(|&k| row[k].clone()).collect();
            out.push(Cell::new(CellValue::Text(t.columns[v].name.clone())));
            out.push(row[v].clone());
            rows.push(out);
        }
    }
    let mut out = t.clone();
    out.columns = columns;
    out.rows = rows;
    Ok(out)
}

fn unfold(t: &TableInstance, key_cols: &[String], var_col: &str, val_col: &str) -> Result<TableInstance, ToolError> {
    let keys = key_cols.iter().map(|c| require_column(t, c)).collect::<Result<Vec<_>, _>>()?;
    let var = require_column(t, var_col)?;
    let val = require_column(t, val_col)?;
    if t.columns[var].declared_type != ValueType::Text {
        return Err(ToolError::TypeMismatch(format!("variable column {var_col:?} must be text")));
    }
    let mut variables: Vec<String> = Vec::new();
    for v in t.column_values(var) {
        let CellValue::Text(name) = v else {
            return Err(ToolError::BadArgument(format!("variable column {var_col:?} has a missing cell")));
        };
        if !variables.contains(name) {
            variables.push(name.clone());
        }
    }
    let mut columns: Vec<Column> = keys.iter().map(|&k| t.columns[k].clone()).collect();
    for name in &variables {
        if columns.iter().any(|c| &c.name == name) {
            return Err(ToolError::BadArgument(format!("variable {name:?} collides with a key column")));
        }
        columns.push(Column::new(name.clone(), t.columns[val].declared_type));
    }

    let mut group_of: HashMap<Vec<String>, usize> = HashMap::new();
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut filled: Vec<Vec<bool>> = Vec::new();
    for row in &t.rows {
        let key: Vec<String> = keys.iter().map(|&k| row[k].value.group_key()).collect();
        let g = *group_of.entry(key).or_insert_with(|| {
            let mut r: Vec<Cell> = keys.iter().map(|&k| row[k].clone()).collect();
            r.extend(std::iter::repeat_with(Cell::missing).take(variables.len()));
            rows.push(r);
            filled.push(vec![false; variables.len()]);
            rows.len() - 1
        });
        let name = row[var].value.as_text().expect("checked above");
        let slot = variables.iter().position(|v| v == name).expect("collected above");
        if std::mem::replace(&mut filled[g][slot], true) {
            return Err(ToolError::BadArgument(format!("duplicate entry for variable {name:?} under one key")));
        }
        rows[g][keys.len() + slot] = row[val].clone();
    }
    let mut out = t.clone();
    out.columns = columns;
    out.rows = rows;
    Ok(out)
}
