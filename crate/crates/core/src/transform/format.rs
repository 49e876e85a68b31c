use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{require_column, ToolError};
use crate::table::TableInstance;
use crate::value::{parse_date, parse_number, CellValue, ValueType, CURRENCY_CODES};

/// Normalization patterns accepted by `formatColumn`.
///
/// Wire spellings: `currency`, `currency:<CODE>` (code used for bare
/// amounts, default USD), `date-iso`, `lower`, `upper`, `trim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormatPattern {
    Currency { default_code: String },
    DateIso,
    Lower,
    Upper,
    Trim,
}

impl FromStr for FormatPattern {
    type Err = ToolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "currency" => FormatPattern::Currency { default_code: "USD".into() },
            "date-iso" | "date" | "iso-date" => FormatPattern::DateIso,
            "lower" | "lowercase" => FormatPattern::Lower,
            "upper" | "uppercase" => FormatPattern::Upper,
            "trim" => FormatPattern::Trim,
            _ => match lower.strip_prefix("currency:") {
                Some(code) if CURRENCY_CODES.contains(&code.to_ascii_uppercase().as_str()) => {
                    FormatPattern::Currency { default_code: code.to_ascii_uppercase() }
                }
                _ => return Err(ToolError::BadArgument(format!("unknown format pattern {s:?}"))),
            },
        })
    }
}

impl fmt::Display for FormatPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatPattern::Currency { default_code } if default_code == "USD" => f.write_str("currency"),
            FormatPattern::Currency { default_code } => write!(f, "currency:{default_code}"),
            FormatPattern::DateIso => f.write_str("date-iso"),
            FormatPattern::Lower => f.write_str("lower"),
            FormatPattern::Upper => f.write_str("upper"),
            FormatPattern::Trim => f.write_str("trim"),
        }
    }
}

impl Serialize for FormatPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FormatPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

const SYMBOL_CODES: &[(&str, &str)] = &[("HK$", "HKD"), ("US $", "USD"), ("US$", "USD"), ("$", "USD"), ("€", "EUR"), ("£", "GBP"), ("¥", "JPY")];

/// The currency code a price string is written in, if it names one.
pub fn detect_currency(raw: &str) -> Option<&'static str> {
    let s = raw.trim().trim_start_matches('-').trim_start();
    let upper = s.to_ascii_uppercase();
    for code in CURRENCY_CODES {
        if upper.starts_with(code) || upper.ends_with(code) {
            return Some(code);
        }
    }
    SYMBOL_CODES.iter().find(|(sym, _)| s.starts_with(sym)).map(|(_, code)| *code)
}

/// Canonical "<amount> <CODE>" rendering, or `None` when the text is not an
/// amount.
pub fn canonical_currency(raw: &str, default_code: &str) -> Option<String> {
    let amount = parse_number(raw)?;
    let code = detect_currency(raw).unwrap_or(default_code);
    Some(format!("{} {code}", CellValue::number(amount)))
}

fn format_text(s: &str, pattern: &FormatPattern) -> Option<String> {
    match pattern {
        FormatPattern::Currency { default_code } => canonical_currency(s, default_code),
        FormatPattern::DateIso => parse_date(s).map(|d| d.format("%Y-%m-%d").to_string()),
        FormatPattern::Lower => Some(s.to_lowercase()),
        FormatPattern::Upper => Some(s.to_uppercase()),
        FormatPattern::Trim => Some(s.split_whitespace().collect::<Vec<_>>().join(" ")),
    }
}

/// Normalizes a text column in place. Cells the pattern cannot read are left
/// as they are; their count is returned. Provenance is kept since the cell
/// still shows the captured datum.
pub fn format_column(t: &TableInstance, column: &str, pattern: &FormatPattern) -> Result<(TableInstance, usize), ToolError> {
    let col = require_column(t, column)?;
    let ty = t.columns[col].declared_type;
    if ty != ValueType::Text {
        return Err(ToolError::TypeMismatch(format!("format patterns apply to text columns, {column:?} is {ty}")));
    }
    let mut out = t.clone();
    let mut unformatted = 0;
    for row in &mut out.rows {
        let CellValue::Text(s) = &row[col].value else { continue };
        match format_text(s, pattern) {
            Some(f) => row[col].value = CellValue::Text(f),
            None => unformatted += 1,
        }
    }
    Ok((out, unformatted))
}

/// Relabels a column. Data and provenance are untouched.
pub fn rename_column(t: &TableInstance, old: &str, new: &str) -> Result<TableInstance, ToolError> {
    let col = require_column(t, old)?;
    if new.trim().is_empty() {
        return Err(ToolError::BadArgument("new column name must not be empty".into()));
    }
    if old != new && t.column_index(new).is_some() {
        return Err(ToolError::BadArgument(format!("column {new:?} already exists")));
    }
    let mut out = t.clone();
    out.columns[col].name = new.to_string();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    fn texts(vals: &[&str]) -> TableInstance {
        TableInstance::from_values(
            "t",
            "t",
            vec![Column::new("Price", ValueType::Text)],
            vals.iter().map(|s| vec![CellValue::text(*s)]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn currency_forms_share_one_canonical_spelling() {
        let (out, bad) = format_column(&texts(&["US $1,299", "1299 USD", "$1,299.00", "HK$ 888", "n/a"]), "Price", &"currency".parse().unwrap()).unwrap();
        let got: Vec<String> = out.column_values(0).map(|v| v.to_string()).collect();
        assert_eq!(got, ["1299 USD", "1299 USD", "1299 USD", "888 HKD", "n/a"]);
        assert_eq!(bad, 1);
    }

    #[test]
    fn pattern_spellings_round_trip() {
        for s in ["currency", "currency:EUR", "date-iso", "lower", "upper", "trim"] {
            let p: FormatPattern = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("currency:XYZ".parse::<FormatPattern>().is_err());
    }

    #[test]
    fn dates_and_case() {
        let (out, _) = format_column(&texts(&["March 5, 2024"]), "Price", &FormatPattern::DateIso).unwrap();
        assert_eq!(out.value(0, 0), &CellValue::text("2024-03-05"));
        let (out, _) = format_column(&texts(&["  Sony   A7 "]), "Price", &FormatPattern::Trim).unwrap();
        assert_eq!(out.value(0, 0), &CellValue::text("Sony A7"));
    }

    #[test]
    fn rename() {
        let t = texts(&["1"]);
        let out = rename_column(&t, "Price", "Price_USD").unwrap();
        assert_eq!(out.columns[0].name, "Price_USD");
        assert_eq!(out.values(), t.values());
        let two = TableInstance::new("t", "t", vec![Column::new("a", ValueType::Text), Column::new("b", ValueType::Text)]).unwrap();
        assert!(matches!(rename_column(&two, "a", "b"), Err(ToolError::BadArgument(_))));
    }
}
