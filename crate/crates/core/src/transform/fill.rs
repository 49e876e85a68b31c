use serde::{Deserialize, Serialize};

use super::{require_column, ToolError};
use crate::table::{Cell, TableInstance};
use crate::value::{CellValue, ValueType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillStrategy {
    Mean,
    Median,
    Mode,
    Interpolation,
    Constant,
}

/// Fills every missing cell of `column`. Filled cells carry no provenance.
pub fn fill_missing_values(
    t: &TableInstance,
    column: &str,
    strategy: FillStrategy,
    constant: Option<CellValue>,
) -> Result<TableInstance, ToolError> {
    let col = require_column(t, column)?;
    let ty = t.columns[col].declared_type;
    if matches!(strategy, FillStrategy::Mean | FillStrategy::Median | FillStrategy::Interpolation) && ty != ValueType::Number {
        return Err(ToolError::TypeMismatch(format!("{strategy:?} needs a number column, {column:?} is {ty}")));
    }
    if (strategy == FillStrategy::Constant) != constant.is_some() {
        return Err(ToolError::BadArgument("a constant is required exactly when strategy is constant".into()));
    }
    let present: Vec<&CellValue> = t.column_values(col).filter(|v| !v.is_missing()).collect();
    if strategy != FillStrategy::Constant && present.is_empty() {
        return Err(ToolError::NoNonMissingValues(column.to_string()));
    }

    let mut out = t.clone();
    let fills: Vec<CellValue> = match strategy {
        FillStrategy::Constant => {
            let c = constant.expect("checked above");
            if c.is_missing() || c.value_type() != Some(ty) {
                return Err(ToolError::TypeMismatch(format!("constant {c:?} does not fit {ty} column {column:?}")));
            }
            vec![c; t.row_count()]
        }
        FillStrategy::Mean => {
            let nums: Vec<f64> = present.iter().filter_map(|v| v.as_number()).collect();
            vec![CellValue::number(nums.iter().sum::<f64>() / nums.len() as f64); t.row_count()]
        }
        FillStrategy::Median => {
            let mut nums: Vec<f64> = present.iter().filter_map(|v| v.as_number()).collect();
            nums.sort_by(f64::total_cmp);
            let m = nums.len();
            let median = if m % 2 == 1 { nums[m / 2] } else { (nums[m / 2 - 1] + nums[m / 2]) / 2.0 };
            vec![CellValue::number(median); t.row_count()]
        }
        FillStrategy::Mode => vec![mode(&present); t.row_count()],
        FillStrategy::Interpolation => interpolate(&t.column_values(col).map(CellValue::as_number).collect::<Vec<_>>())
            .into_iter()
            .map(CellValue::number)
            .collect(),
    };
    for (row, fill) in out.rows.iter_mut().zip(fills) {
        if row[col].value.is_missing() {
            row[col] = Cell::new(fill);
        }
    }
    Ok(out)
}

/// Most frequent value; ties go to the smallest value.
fn mode(values: &[&CellValue]) -> CellValue {
    let mut sorted: Vec<&CellValue> = values.to_vec();
    sorted.sort_by(|a, b| a.compare(b));
    let mut best: Option<(&CellValue, usize)> = None;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if best.map_or(true, |(_, n)| j - i > n) {
            best = Some((sorted[i], j - i));
        }
        i = j;
    }
    best.map(|(v, _)| v.clone()).unwrap_or(CellValue::Missing)
}

/// Linear interpolation over row index. Leading and trailing gaps copy the
/// nearest present value. Requires at least one present value.
fn interpolate(vals: &[Option<f64>]) -> Vec<f64> {
    let known: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_some()).collect();
    (0..vals.len())
        .map(|i| {
            if let Some(v) = vals[i] {
                return v;
            }
            let next = known.partition_point(|&k| k < i);
            match (next.checked_sub(1).map(|p| known[p]), known.get(next).copied()) {
                (Some(a), Some(b)) => {
                    let (va, vb) = (vals[a].unwrap(), vals[b].unwrap());
                    va + (vb - va) * (i - a) as f64 / (b - a) as f64
                }
                (Some(a), None) => vals[a].unwrap(),
                (None, Some(b)) => vals[b].unwrap(),
                (None, None) => unreachable!("at least one value is present"),
            }
        })
        .collect()
}
