use std::collections::HashSet;

use super::{Cell, ColumnSpec, Dtype};

/// Knobs for turning raw strings into typed cells.
#[derive(Debug, Clone)]
pub struct SchemaOptions {
    /// Compared case-insensitively.
    pub missing_tokens: Vec<String>,
    pub true_tokens: Vec<String>,
    pub false_tokens: Vec<String>,
    /// A string column becomes `text` when its distinct count exceeds
    /// `max(categorical_cap, categorical_cap_fraction * rows)`.
    pub categorical_cap: usize,
    pub categorical_cap_fraction: f64,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        SchemaOptions {
            missing_tokens: ["", "NA", "N/A", "null", "NaN"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            true_tokens: vec!["true".into()],
            false_tokens: vec!["false".into()],
            categorical_cap: 100,
            categorical_cap_fraction: 0.5,
        }
    }
}

impl SchemaOptions {
    pub fn is_missing(&self, raw: &str) -> bool {
        self.missing_tokens
            .iter()
            .any(|t| t.eq_ignore_ascii_case(raw))
    }

    fn boolean(&self, raw: &str) -> Option<bool> {
        if self.true_tokens.iter().any(|t| t.eq_ignore_ascii_case(raw)) {
            Some(true)
        } else if self
            .false_tokens
            .iter()
            .any(|t| t.eq_ignore_ascii_case(raw))
        {
            Some(false)
        } else {
            None
        }
    }

    fn categorical_limit(&self, rows: usize) -> usize {
        let frac = (self.categorical_cap_fraction * rows as f64).floor() as usize;
        self.categorical_cap.max(frac)
    }

    /// Converts one raw field to a cell of the given dtype. The caller
    /// guarantees the field conforms (as established by inference).
    pub(crate) fn parse_cell(&self, raw: &str, dtype: Dtype) -> Cell {
        if self.is_missing(raw) {
            return Cell::Missing;
        }
        match dtype {
            Dtype::Numeric => parse_numeric(raw)
                .map(Cell::Numeric)
                .unwrap_or(Cell::Missing),
            Dtype::Boolean => self
                .boolean(raw)
                .map(Cell::Boolean)
                .unwrap_or(Cell::Missing),
            Dtype::Categorical => Cell::Categorical(raw.to_string()),
            Dtype::Text => Cell::Text(raw.to_string()),
        }
    }
}

/// Strict decimal parser: optional sign, digits with an optional decimal
/// point, optional exponent. No locale formats, no `inf`/`nan` spellings,
/// and the result must be finite.
pub fn parse_numeric(raw: &str) -> Option<f64> {
    let bytes = raw.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let int_digits = i - int_start;
    let mut frac_digits = 0;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let s = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        frac_digits = i - s;
    }
    if int_digits + frac_digits == 0 {
        return None;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let s = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == s {
            return None;
        }
    }
    if i != bytes.len() {
        return None;
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Infers one [`ColumnSpec`] per header entry from a rectangular grid of raw
/// strings. Numeric wins over boolean, boolean over categorical; a string
/// column with too many distinct values is `text`. A column with no observed
/// values is numeric (every observed entry parses, vacuously).
pub fn infer_schema(
    header: &[String],
    grid: &[Vec<String>],
    opts: &SchemaOptions,
) -> Vec<ColumnSpec> {
    let limit = opts.categorical_limit(grid.len());
    header
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let observed: Vec<&str> = grid
                .iter()
                .map(|row| row[c].as_str())
                .filter(|v| !opts.is_missing(v))
                .collect();
            let dtype = if observed.iter().all(|v| parse_numeric(v).is_some()) {
                Dtype::Numeric
            } else if observed.iter().all(|v| opts.boolean(v).is_some()) {
                Dtype::Boolean
            } else {
                let distinct: HashSet<&str> = observed.iter().copied().collect();
                if distinct.len() > limit {
                    Dtype::Text
                } else {
                    Dtype::Categorical
                }
            };
            let mut spec = ColumnSpec::new(name.clone(), dtype);
            spec.missing_count = grid.len() - observed.len();
            spec
        })
        .collect()
}
