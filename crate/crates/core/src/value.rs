//! Typed cell values and the parsing rules that move text between types.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

/// Declared type of a column. `Missing` is a cell state, never a column type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueType {
    Text,
    Number,
    Boolean,
    Date,
    ImageRef,
}

impl ValueType {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueType::Text => "text",
            ValueType::Number => "number",
            ValueType::Boolean => "boolean",
            ValueType::Date => "date",
            ValueType::ImageRef => "image-ref",
        }
    }

    pub fn is_ordered(self) -> bool {
        matches!(self, ValueType::Text | ValueType::Number | ValueType::Date)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single cell.
///
/// Numbers are always finite; constructors that take an `f64` fold NaN and
/// infinities into [`CellValue::Missing`]. Missing is its own variant and is
/// never encoded as an empty string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", try_from = "RawCell")]
pub enum CellValue {
    Text(String),
    Number(f64),
    Boolean(bool),
    Date(NaiveDate),
    ImageRef(String),
    Missing,
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawCell {
    Text(String),
    Number(f64),
    Boolean(bool),
    Date(NaiveDate),
    ImageRef(String),
    Missing,
}

impl TryFrom<RawCell> for CellValue {
    type Error = String;

    fn try_from(raw: RawCell) -> Result<Self, Self::Error> {
        Ok(match raw {
            RawCell::Text(s) => CellValue::Text(s),
            RawCell::Number(n) if n.is_finite() => CellValue::Number(n),
            RawCell::Number(n) => return Err(format!("non-finite number {n}")),
            RawCell::Boolean(b) => CellValue::Boolean(b),
            RawCell::Date(d) => CellValue::Date(d),
            RawCell::ImageRef(u) if is_valid_image_ref(&u) => CellValue::ImageRef(u),
            RawCell::ImageRef(u) => return Err(format!("invalid image reference {u:?}")),
            RawCell::Missing => CellValue::Missing,
        })
    }
}

impl CellValue {
    pub fn text(s: impl Into<String>) -> Self {
        CellValue::Text(s.into())
    }

    pub fn number(n: f64) -> Self {
        if n.is_finite() {
            // -0.0 and 0.0 serialize differently; keep one canonical zero.
            CellValue::Number(if n == 0.0 { 0.0 } else { n })
        } else {
            CellValue::Missing
        }
    }

    pub fn image_ref(url: impl Into<String>) -> Option<Self> {
        let url = url.into();
        is_valid_image_ref(&url).then_some(CellValue::ImageRef(url))
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }

    pub fn value_type(&self) -> Option<ValueType> {
        match self {
            CellValue::Text(_) => Some(ValueType::Text),
            CellValue::Number(_) => Some(ValueType::Number),
            CellValue::Boolean(_) => Some(ValueType::Boolean),
            CellValue::Date(_) => Some(ValueType::Date),
            CellValue::ImageRef(_) => Some(ValueType::ImageRef),
            CellValue::Missing => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            CellValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Plain-text rendering; `None` for missing.
    pub fn display_string(&self) -> Option<String> {
        match self {
            CellValue::Missing => None,
            other => Some(other.to_string()),
        }
    }

    /// Ordering between two non-missing values of the same type.
    /// Values of different types order by type tag so the relation stays total.
    pub fn compare(&self, other: &CellValue) -> Ordering {
        use CellValue::*;
        match (self, other) {
            (Number(a), Number(b)) => a.total_cmp(b),
            (Text(a), Text(b)) | (ImageRef(a), ImageRef(b)) => a.cmp(b),
            (Boolean(a), Boolean(b)) => a.cmp(b),
            (Date(a), Date(b)) => a.cmp(b),
            (Missing, Missing) => Ordering::Equal,
            (Missing, _) => Ordering::Greater,
            (_, Missing) => Ordering::Less,
            (a, b) => a.value_type().cmp(&b.value_type()),
        }
    }

    /// Key usable for hashing/grouping. Distinguishes types and treats all
    /// missing cells as one key.
    pub fn group_key(&self) -> String {
        match self {
            CellValue::Missing => "\u{0}missing".to_string(),
            CellValue::Number(n) => format!("n:{}", n.to_bits()),
            other => format!("{}:{}", other.value_type().map(ValueType::as_str).unwrap_or(""), other),
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Text(s) | CellValue::ImageRef(s) => f.write_str(s),
            CellValue::Number(n) => write!(f, "{n}"),
            CellValue::Boolean(b) => write!(f, "{b}"),
            CellValue::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            CellValue::Missing => Ok(()),
        }
    }
}

/// Image references must be absolute URLs or relative references that join
/// cleanly against a base.
pub fn is_valid_image_ref(s: &str) -> bool {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return false;
    }
    if url::Url::parse(s).is_ok() {
        return true;
    }
    let base = url::Url::parse("http://base.invalid/").expect("static base url");
    base.join(s).is_ok()
}

/// Currency prefixes removed by the default number cleaning, longest first.
pub const CURRENCY_SYMBOLS: &[&str] = &["HK$", "US $", "US$", "$", "€", "£", "¥"];

/// ISO codes recognised next to amounts (the canonical currency format is
/// `<amount> <CODE>`).
pub const CURRENCY_CODES: &[&str] = &["USD", "HKD", "EUR", "GBP", "JPY", "CNY"];

fn plain_number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[+-]?(\d+\.?\d*|\.\d+)$").expect("valid regex"))
}

/// Default currency/number cleaning: surrounding whitespace, one leading
/// currency symbol or ISO code, one trailing ISO code, and thousands
/// separators. Returns the cleaned text, which may still fail to parse.
pub fn clean_numeric_text(raw: &str) -> String {
    let mut s = raw.trim();
    for code in CURRENCY_CODES {
        if let Some(rest) = s.strip_suffix(code) {
            if rest.is_empty() || rest.ends_with(|c: char| c.is_ascii_digit() || c.is_whitespace()) {
                s = rest.trim_end();
                break;
            }
        }
    }
    let mut negative = false;
    if let Some(rest) = s.strip_prefix('-') {
        negative = true;
        s = rest.trim_start();
    }
    for sym in CURRENCY_SYMBOLS.iter().chain(CURRENCY_CODES) {
        if let Some(rest) = s.strip_prefix(sym) {
            s = rest.trim_start();
            break;
        }
    }
    let body: String = s.chars().filter(|&c| c != ',').collect();
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Parses a number after default cleaning. Non-finite results are rejected.
pub fn parse_number(raw: &str) -> Option<f64> {
    let cleaned = clean_numeric_text(raw);
    if !plain_number_re().is_match(&cleaned) {
        return None;
    }
    cleaned.parse::<f64>().ok().filter(|n| n.is_finite())
}

const DATE_FORMATS: &[&str] = &[
    "%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y", "%B %d, %Y", "%b %d, %Y", "%d %B %Y", "%d %b %Y", "%Y.%m.%d",
];

/// Parses common date spellings into a calendar day.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    DATE_FORMATS.iter().find_map(|f| NaiveDate::parse_from_str(s, f).ok())
}

pub fn parse_boolean(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" | "1" => Some(true),
        "false" | "no" | "n" | "0" => Some(false),
        _ => None,
    }
}
