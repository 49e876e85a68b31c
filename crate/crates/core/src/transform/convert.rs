use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{require_column, ToolError};
use crate::table::TableInstance;
use crate::value::{parse_boolean, parse_date, parse_number, CellValue, ValueType};

/// Per-cell outcome of a type conversion, part of the tool result record.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub converted: usize,
    pub failed: usize,
    pub failed_rows: Vec<usize>,
}

/// Converts one cell value. `None` means the value does not fit the target.
pub fn convert_value(v: &CellValue, target: ValueType, cleaning: Option<&Regex>) -> Option<CellValue> {
    if v.is_missing() {
        return Some(CellValue::Missing);
    }
    if v.value_type() == Some(target) {
        return Some(v.clone());
    }
    let raw = v.to_string();
    let text = match cleaning {
        Some(re) => re.replace_all(&raw, "").into_owned(),
        None => raw,
    };
    match target {
        ValueType::Text => Some(CellValue::Text(text)),
        ValueType::Number => match v {
            CellValue::Boolean(b) => Some(CellValue::number(if *b { 1.0 } else { 0.0 })),
            _ => parse_number(&text).map(CellValue::number),
        },
        ValueType::Boolean => parse_boolean(&text).map(CellValue::Boolean),
        ValueType::Date => parse_date(&text).map(CellValue::Date),
        ValueType::ImageRef => CellValue::image_ref(text.trim()),
    }
}

/// Changes a column's declared type. Cells that do not convert become
/// missing and are listed in the report; the call itself never fails on data.
pub fn convert_column_type(
    t: &TableInstance,
    column: &str,
    target: ValueType,
    cleaning_pattern: Option<&str>,
) -> Result<(TableInstance, ConversionReport), ToolError> {
    let col = require_column(t, column)?;
    if t.columns[col].declared_type == target {
        return Err(ToolError::BadArgument(format!("column {column:?} is already {target}")));
    }
    let cleaning = cleaning_pattern
        .map(|p| Regex::new(p).map_err(|e| ToolError::BadArgument(format!("bad cleaning pattern: {e}"))))
        .transpose()?;
    let mut out = t.clone();
    out.columns[col].declared_type = target;
    let mut report = ConversionReport::default();
    for (i, row) in out.rows.iter_mut().enumerate() {
        let cell = &mut row[col];
        if cell.value.is_missing() {
            continue;
        }
        match convert_value(&cell.value, target, cleaning.as_ref()) {
            Some(v) => {
                cell.value = v;
                report.converted += 1;
            }
            None => {
                cell.value = CellValue::Missing;
                report.failed += 1;
                report.failed_rows.push(i);
            }
        }
    }
    Ok((out, report))
}
