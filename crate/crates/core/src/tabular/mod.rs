//! Immutable, typed tabular data.
//!
//! A [`Dataset`] is a row-major grid of [`Cell`]s with a declared schema and
//! an append-only lineage of the operations that produced it. Datasets are
//! never mutated in place: every transformation returns a new value whose
//! identity is derived from its parent and the applied operation.

mod csv_io;
mod schema;
mod split;
mod summary;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use csv_io::{read_csv, read_csv_str, write_csv, write_csv_string, ReadOptions};
pub use schema::{infer_schema, parse_numeric, SchemaOptions};
pub use split::split_train_test;
pub use summary::{
    describe_column, summarize, CategoricalSummary, ColumnSummary, Fact, NumericSummary,
    TextSummary,
};

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("cannot read {path}: {reason}")]
    FileUnreadable { path: String, reason: String },
    #[error("malformed CSV at row {row}: {reason}")]
    MalformedCsv { row: usize, reason: String },
    #[error("file {0} is empty")]
    EmptyFile(String),
    #[error("I/O failure: {0}")]
    IoFailure(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("cell at row {row}, column `{column}` does not conform to dtype {dtype}")]
    DtypeViolation {
        row: usize,
        column: String,
        dtype: Dtype,
    },
    #[error("more than one target column ({0} and {1})")]
    MultipleTargets(String, String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{column}` has unsupported dtype {dtype} for this operation")]
    UnsupportedDtype { column: String, dtype: Dtype },
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dtype {
    Numeric,
    Categorical,
    Boolean,
    Text,
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dtype::Numeric => "numeric",
            Dtype::Categorical => "categorical",
            Dtype::Boolean => "boolean",
            Dtype::Text => "text",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Feature,
    Target,
    Identifier,
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub dtype: Dtype,
    pub role: Role,
    pub missing_count: usize,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, dtype: Dtype) -> Self {
        ColumnSpec {
            name: name.into(),
            dtype,
            role: Role::Feature,
            missing_count: 0,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }
}

/// A single value. Numeric cells are always finite; NaN is `Missing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Numeric(f64),
    Categorical(String),
    Boolean(bool),
    Text(String),
    Missing,
}

impl Cell {
    /// Numeric cell, mapping non-finite inputs to `Missing`.
    pub fn number(v: f64) -> Cell {
        if v.is_finite() {
            Cell::Numeric(v)
        } else {
            Cell::Missing
        }
    }

    pub fn category(s: impl Into<String>) -> Cell {
        Cell::Categorical(s.into())
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Numeric(v) => Some(*v),
            Cell::Boolean(b) => Some(if *b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    /// Textual rendering used for labels, grouping keys and CSV output.
    /// `Missing` renders as the empty string.
    pub fn render(&self) -> String {
        match self {
            Cell::Numeric(v) => format!("{v}"),
            Cell::Categorical(s) | Cell::Text(s) => s.clone(),
            Cell::Boolean(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    pub fn conforms_to(&self, dtype: Dtype) -> bool {
        matches!(
            (self, dtype),
            (Cell::Missing, _)
                | (Cell::Numeric(_), Dtype::Numeric)
                | (Cell::Categorical(_), Dtype::Categorical)
                | (Cell::Boolean(_), Dtype::Boolean)
                | (Cell::Text(_), Dtype::Text)
        )
    }
}

/// Scalar parameter value carried in lineage entries and operation descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Param {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Param::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Param::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Param::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Param::Bool(_) => "boolean",
            Param::Number(_) => "number",
            Param::Text(_) => "string",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Bool(b) => write!(f, "{b}"),
            Param::Number(v) => write!(f, "{v}"),
            Param::Text(s) => write!(f, "{s}"),
        }
    }
}

/// One applied operation. `removed`, `added` and `retyped` make schema changes
/// auditable: a column that disappears or changes dtype is explained only if
/// some lineage entry lists it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEntry {
    pub op: String,
    pub columns: Vec<String>,
    pub params: BTreeMap<String, Param>,
    pub parent: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub added: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retyped: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl LineageEntry {
    pub fn new(op: impl Into<String>, columns: Vec<String>, parent: impl Into<String>) -> Self {
        LineageEntry {
            op: op.into(),
            columns,
            params: BTreeMap::new(),
            parent: parent.into(),
            removed: Vec::new(),
            added: Vec::new(),
            retyped: Vec::new(),
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    id: String,
    name: String,
    columns: Vec<ColumnSpec>,
    rows: Vec<Vec<Cell>>,
    lineage: Vec<LineageEntry>,
}

impl Dataset {
    /// Builds a raw dataset (empty lineage). Missing counts are recomputed
    /// from the cells; the caller's values are ignored.
    pub fn new(
        name: impl Into<String>,
        columns: Vec<ColumnSpec>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self, TabularError> {
        Self::build(name.into(), columns, rows, true)
    }

    /// Like [`Dataset::new`] but tolerates repeated column names. Only the
    /// CSV loader uses this, so that duplicated headers in an input file reach
    /// the check suite instead of failing the load.
    pub fn new_lenient(
        name: impl Into<String>,
        columns: Vec<ColumnSpec>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self, TabularError> {
        Self::build(name.into(), columns, rows, false)
    }

    /// Column-major convenience constructor used heavily in tests.
    pub fn from_columns(
        name: impl Into<String>,
        columns: Vec<(&str, Dtype, Vec<Cell>)>,
    ) -> Result<Self, TabularError> {
        let n = columns.first().map(|c| c.2.len()).unwrap_or(0);
        let mut rows = vec![Vec::with_capacity(columns.len()); n];
        let mut specs = Vec::with_capacity(columns.len());
        for (name, dtype, cells) in columns {
            if cells.len() != n {
                return Err(TabularError::RaggedRow {
                    row: 0,
                    found: cells.len(),
                    expected: n,
                });
            }
            specs.push(ColumnSpec::new(name, dtype));
            for (row, cell) in rows.iter_mut().zip(cells) {
                row.push(cell);
            }
        }
        Self::new(name, specs, rows)
    }

    fn build(
        name: String,
        mut columns: Vec<ColumnSpec>,
        rows: Vec<Vec<Cell>>,
        unique_names: bool,
    ) -> Result<Self, TabularError> {
        validate(&mut columns, &rows, unique_names)?;
        let mut ds = Dataset {
            id: String::new(),
            name,
            columns,
            rows,
            lineage: Vec::new(),
        };
        ds.id = ds.content_hash();
        Ok(ds)
    }

    /// Creates the child of `self` produced by `entry`. The child's id is a
    /// hash of the parent id and the entry.
    pub(crate) fn derive(
        &self,
        mut entry: LineageEntry,
        mut columns: Vec<ColumnSpec>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Dataset, TabularError> {
        validate(&mut columns, &rows, true)?;
        entry.parent = self.id.clone();
        let mut hasher = Sha256::new();
        hasher.update(self.id.as_bytes());
        hasher.update(serde_json::to_vec(&entry).unwrap_or_default());
        let id = short_hex(&hasher.finalize());
        let mut lineage = self.lineage.clone();
        lineage.push(entry);
        Ok(Dataset {
            id,
            name: self.name.clone(),
            columns,
            rows,
            lineage,
        })
    }

    fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.name.as_bytes());
        hasher.update(serde_json::to_vec(&self.columns).unwrap_or_default());
        hasher.update(serde_json::to_vec(&self.rows).unwrap_or_default());
        short_hex(&hasher.finalize())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn lineage(&self) -> &[LineageEntry] {
        &self.lineage
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_spec(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize, TabularError> {
        self.column_index(name)
            .ok_or_else(|| TabularError::UnknownColumn(name.to_string()))
    }

    pub fn cells(&self, col: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[col])
    }

    /// Numeric view of a column, `None` for missing (or non-numeric) cells.
    pub fn numeric_column(&self, col: usize) -> Vec<Option<f64>> {
        self.cells(col).map(Cell::as_f64).collect()
    }

    /// Observed (non-missing) numeric values of a column, in row order.
    pub fn observed_numeric(&self, col: usize) -> Vec<f64> {
        self.cells(col).filter_map(Cell::as_f64).collect()
    }

    pub fn target(&self) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.role == Role::Target)
    }

    pub fn missing_total(&self) -> usize {
        self.columns.iter().map(|c| c.missing_count).sum()
    }

    /// Assigns a role to a column. Roles are annotations: identity and
    /// lineage are unchanged. Assigning `Target` demotes any previous target
    /// to `Feature`.
    pub fn with_role(&self, name: &str, role: Role) -> Result<Dataset, TabularError> {
        let idx = self.require_column(name)?;
        let mut out = self.clone();
        if role == Role::Target {
            for c in out.columns.iter_mut() {
                if c.role == Role::Target {
                    c.role = Role::Feature;
                }
            }
        }
        out.columns[idx].role = role;
        Ok(out)
    }

    pub fn with_id(&self, id: impl Into<String>) -> Dataset {
        let mut out = self.clone();
        out.id = id.into();
        out
    }

    pub fn with_name(&self, name: impl Into<String>) -> Dataset {
        let mut out = self.clone();
        out.name = name.into();
        out
    }

    /// Equality of schema and values, ignoring id, name and lineage.
    pub fn value_eq(&self, other: &Dataset) -> bool {
        self.columns == other.columns && self.rows == other.rows
    }

    pub fn has_unique_column_names(&self) -> bool {
        let mut seen = HashSet::new();
        self.columns.iter().all(|c| seen.insert(c.name.as_str()))
    }

    /// Selects rows by index, keeping the schema and roles.
    pub(crate) fn select_rows(
        &self,
        indices: &[usize],
        entry: LineageEntry,
    ) -> Result<Dataset, TabularError> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        self.derive(entry, self.columns.clone(), rows)
    }
}

fn validate(
    columns: &mut [ColumnSpec],
    rows: &[Vec<Cell>],
    unique_names: bool,
) -> Result<(), TabularError> {
    if unique_names {
        let mut seen = HashSet::new();
        for c in columns.iter() {
            if !seen.insert(c.name.as_str()) {
                return Err(TabularError::DuplicateColumn(c.name.clone()));
            }
        }
    }
    let mut target: Option<&str> = None;
    for c in columns.iter() {
        if c.role == Role::Target {
            if let Some(t) = target {
                return Err(TabularError::MultipleTargets(t.to_string(), c.name.clone()));
            }
            target = Some(&c.name);
        }
    }
    let mut missing = vec![0usize; columns.len()];
    for (r, row) in rows.iter().enumerate() {
        if row.len() != columns.len() {
            return Err(TabularError::RaggedRow {
                row: r,
                found: row.len(),
                expected: columns.len(),
            });
        }
        for (c, cell) in row.iter().enumerate() {
            if let Cell::Numeric(v) = cell {
                if !v.is_finite() {
                    return Err(TabularError::DtypeViolation {
                        row: r,
                        column: columns[c].name.clone(),
                        dtype: columns[c].dtype,
                    });
                }
            }
            if !cell.conforms_to(columns[c].dtype) {
                return Err(TabularError::DtypeViolation {
                    row: r,
                    column: columns[c].name.clone(),
                    dtype: columns[c].dtype,
                });
            }
            if cell.is_missing() {
                missing[c] += 1;
            }
        }
    }
    for (c, m) in columns.iter_mut().zip(missing) {
        c.missing_count = m;
    }
    Ok(())
}

fn short_hex(digest: &[u8]) -> String {
    hex::encode(&digest[..8])
}
