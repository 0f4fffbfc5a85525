//! Structural and logical checks gating a cleaned dataset.
//!
//! Every check yields a [`CheckResult`]; failures are data, not errors. The
//! suite runs enabled checks in a fixed canonical order and passes iff every
//! result passes.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{read_csv, Dataset, ReadOptions};

pub const FILE_READABLE: &str = "test_file_readable";
pub const EMPTY_DATASET: &str = "test_empty_dataset";
pub const MISSING_VALUES: &str = "test_missing_values";
pub const DUPLICATED_FEATURES: &str = "test_duplicated_features";
pub const DUPLICATED_ROWS: &str = "test_duplicated_rows";
pub const DATA_CONSISTENCY: &str = "test_data_consistency";
pub const DATA_RETENTION: &str = "test_data_retention";

/// Canonical execution and reporting order.
pub const CHECK_NAMES: [&str; 7] = [
    FILE_READABLE,
    EMPTY_DATASET,
    MISSING_VALUES,
    DUPLICATED_FEATURES,
    DUPLICATED_ROWS,
    DATA_CONSISTENCY,
    DATA_RETENTION,
];

pub const DEFAULT_RETENTION_THRESHOLD: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub message: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, message: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckConfigError {
    #[error("retention threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub retention_threshold: f64,
    pub require_no_missing: bool,
    pub checks_enabled: BTreeSet<String>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            retention_threshold: DEFAULT_RETENTION_THRESHOLD,
            require_no_missing: true,
            checks_enabled: CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl CheckConfig {
    pub fn with_threshold(mut self, t: f64) -> Result<Self, CheckConfigError> {
        self.retention_threshold = t;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CheckConfigError> {
        if !(self.retention_threshold > 0.0 && self.retention_threshold <= 1.0) {
            return Err(CheckConfigError::InvalidThreshold(self.retention_threshold));
        }
        if let Some(bad) = self
            .checks_enabled
            .iter()
            .find(|c| !CHECK_NAMES.contains(&c.as_str()))
        {
            return Err(CheckConfigError::UnknownCheck(bad.clone()));
        }
        Ok(())
    }

    fn enabled(&self, name: &str) -> bool {
        self.checks_enabled.contains(name)
    }
}

/// Readability check for a dataset file on disk.
pub fn test_file_readable_path(path: &Path, opts: &ReadOptions) -> CheckResult {
    match read_csv(path, opts) {
        Ok(ds) => CheckResult::new(
            FILE_READABLE,
            true,
            format!(
                "{} readable ({} rows, {} columns)",
                path.display(),
                ds.n_rows(),
                ds.n_cols()
            ),
        ),
        Err(e) => CheckResult::new(FILE_READABLE, false, e.to_string()),
    }
}

/// In-memory datasets were necessarily loaded, so this always passes.
pub fn test_file_readable(ds: &Dataset) -> CheckResult {
    CheckResult::new(
        FILE_READABLE,
        true,
        format!(
            "dataset in memory ({} rows, {} columns)",
            ds.n_rows(),
            ds.n_cols()
        ),
    )
}

pub fn test_empty_dataset(ds: &Dataset) -> CheckResult {
    if ds.n_rows() == 0 {
        CheckResult::new(
            EMPTY_DATASET,
            false,
            format!("dataset has {} columns but no rows", ds.n_cols()),
        )
    } else {
        CheckResult::new(EMPTY_DATASET, true, format!("{} rows", ds.n_rows()))
    }
}

pub fn test_missing_values(ds: &Dataset, require_no_missing: bool) -> CheckResult {
    let rows = ds.n_rows().max(1) as f64;
    let with_missing: Vec<String> = ds
        .columns()
        .iter()
        .filter(|c| c.missing_count > 0)
        .map(|c| format!("{}: {:.4}", c.name, c.missing_count as f64 / rows))
        .collect();
    if with_missing.is_empty() {
        return CheckResult::new(MISSING_VALUES, true, "no missing values");
    }
    let msg = format!("missing proportions: {}", with_missing.join(", "));
    CheckResult::new(MISSING_VALUES, !require_no_missing, msg)
}

pub fn test_duplicated_features(ds: &Dataset) -> CheckResult {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for c in ds.columns() {
        match counts.iter_mut().find(|(n, _)| *n == c.name) {
            Some(entry) => entry.1 += 1,
            None => counts.push((&c.name, 1)),
        }
    }
    let dups: Vec<String> = counts
        .iter()
        .filter(|(_, n)| *n > 1)
        .map(|(c, n)| format!("{c} ({n}x)"))
        .collect();
    if dups.is_empty() {
        CheckResult::new(
            DUPLICATED_FEATURES,
            true,
            format!("{} distinct column names", ds.n_cols()),
        )
    } else {
        CheckResult::new(
            DUPLICATED_FEATURES,
            false,
            format!("duplicated column names: {}", dups.join(", ")),
        )
    }
}

pub fn test_duplicated_rows(ds: &Dataset) -> CheckResult {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut dup = 0usize;
    let mut first: Option<(usize, usize)> = None;
    for (i, row) in ds.rows().iter().enumerate() {
        let key = serde_json::to_string(row).unwrap_or_default();
        match seen.get(&key) {
            Some(&j) => {
                dup += 1;
                first.get_or_insert((i, j));
            }
            None => {
                seen.insert(key, i);
            }
        }
    }
    match first {
        None => CheckResult::new(DUPLICATED_ROWS, true, "no duplicate rows"),
        Some((i, j)) => CheckResult::new(
            DUPLICATED_ROWS,
            false,
            format!("{dup} duplicate rows (row {i} repeats row {j})"),
        ),
    }
}

/// Every raw column that vanished or changed dtype must be declared by a
/// lineage entry of the cleaned dataset.
pub fn test_data_consistency(clean: &Dataset, raw: &Dataset) -> CheckResult {
    let declared_removed: BTreeSet<&str> = clean
        .lineage()
        .iter()
        .flat_map(|e| e.removed.iter().map(String::as_str))
        .collect();
    let declared_retyped: BTreeSet<&str> = clean
        .lineage()
        .iter()
        .flat_map(|e| e.retyped.iter().map(String::as_str))
        .collect();
    let mut problems = Vec::new();
    for rc in raw.columns() {
        match clean.column_spec(&rc.name) {
            None if !declared_removed.contains(rc.name.as_str()) => problems.push(format!(
                "column `{}` disappeared without a lineage entry",
                rc.name
            )),
            Some(cc) if cc.dtype != rc.dtype && !declared_retyped.contains(rc.name.as_str()) => {
                problems.push(format!(
                    "column `{}` changed from {} to {} without a lineage entry",
                    rc.name, rc.dtype, cc.dtype
                ))
            }
            _ => {}
        }
    }
    if problems.is_empty() {
        CheckResult::new(
            DATA_CONSISTENCY,
            true,
            "all schema changes are declared in lineage",
        )
    } else {
        CheckResult::new(DATA_CONSISTENCY, false, problems.join("; "))
    }
}

/// Passes iff `rows(clean) / rows(raw)` is strictly above `threshold`.
pub fn test_data_retention(clean: &Dataset, raw: &Dataset, threshold: f64) -> CheckResult {
    if raw.n_rows() == 0 {
        return CheckResult::new(DATA_RETENTION, false, "raw dataset has no rows");
    }
    let ratio = clean.n_rows() as f64 / raw.n_rows() as f64;
    let detail = format!(
        "retention {ratio:.4} ({} of {} rows)",
        clean.n_rows(),
        raw.n_rows()
    );
    if ratio > threshold {
        CheckResult::new(
            DATA_RETENTION,
            true,
            format!("{detail} above threshold {threshold}"),
        )
    } else {
        CheckResult::new(
            DATA_RETENTION,
            false,
            format!("{detail} not above threshold {threshold}"),
        )
    }
}

pub fn run_suite(clean: &Dataset, raw: &Dataset, cfg: &CheckConfig) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for name in CHECK_NAMES {
        if !cfg.enabled(name) {
            continue;
        }
        out.push(match name {
            FILE_READABLE => test_file_readable(clean),
            EMPTY_DATASET => test_empty_dataset(clean),
            MISSING_VALUES => test_missing_values(clean, cfg.require_no_missing),
            DUPLICATED_FEATURES => test_duplicated_features(clean),
            DUPLICATED_ROWS => test_duplicated_rows(clean),
            DATA_CONSISTENCY => test_data_consistency(clean, raw),
            _ => test_data_retention(clean, raw, cfg.retention_threshold),
        });
    }
    out
}

pub fn suite_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

/// Messages of the failing checks, one line each.
pub fn failure_summary(results: &[CheckResult]) -> Vec<String> {
    results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}: {}", r.name, r.message))
        .collect()
}
