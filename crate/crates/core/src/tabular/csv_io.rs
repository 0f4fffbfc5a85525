use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::schema::{infer_schema, SchemaOptions};
use super::{Cell, Dataset, Dtype, TabularError};

#[derive(Debug, Clone)]
pub struct ReadOptions {
    pub delimiter: u8,
    pub header_required: bool,
    /// Strip surrounding whitespace from every field before typing.
    pub trim: bool,
    pub schema: SchemaOptions,
    /// Forced dtypes by column name (e.g. the training schema when reading
    /// held-out rows). Values that do not parse as the forced dtype become
    /// `Missing`.
    pub dtype_overrides: BTreeMap<String, Dtype>,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            delimiter: b',',
            header_required: true,
            trim: false,
            schema: SchemaOptions::default(),
            dtype_overrides: BTreeMap::new(),
        }
    }
}

impl ReadOptions {
    pub fn with_missing_tokens(mut self, tokens: &[&str]) -> Self {
        self.schema.missing_tokens = tokens.iter().map(|s| s.to_string()).collect();
        self
    }
}

pub fn read_csv(path: &Path, opts: &ReadOptions) -> Result<Dataset, TabularError> {
    let bytes = fs::read(path).map_err(|e| TabularError::FileUnreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let text = String::from_utf8(bytes).map_err(|e| TabularError::FileUnreadable {
        path: path.display().to_string(),
        reason: format!("not valid UTF-8: {e}"),
    })?;
    if text.trim().is_empty() {
        return Err(TabularError::EmptyFile(path.display().to_string()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv_str(&name, &text, opts)
}

/// Parses CSV text already in memory. `name` becomes the dataset name.
pub fn read_csv_str(name: &str, text: &str, opts: &ReadOptions) -> Result<Dataset, TabularError> {
    if text.trim().is_empty() {
        return Err(TabularError::EmptyFile(name.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(if opts.trim {
            csv::Trim::All
        } else {
            csv::Trim::None
        })
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| TabularError::MalformedCsv {
            row: i,
            reason: e.to_string(),
        })?;
        records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let (header, data) = if opts.header_required {
        let mut it = records.into_iter();
        let header = it
            .next()
            .ok_or_else(|| TabularError::EmptyFile(name.to_string()))?;
        (header, it.collect::<Vec<_>>())
    } else {
        let width = records.first().map(Vec::len).unwrap_or(0);
        ((1..=width).map(|i| format!("col_{i}")).collect(), records)
    };
    for (i, row) in data.iter().enumerate() {
        if row.len() != header.len() {
            return Err(TabularError::MalformedCsv {
                row: i + 1,
                reason: format!("expected {} fields, found {}", header.len(), row.len()),
            });
        }
    }
    let mut specs = infer_schema(&header, &data, &opts.schema);
    for spec in &mut specs {
        if let Some(&dtype) = opts.dtype_overrides.get(&spec.name) {
            spec.dtype = dtype;
        }
    }
    let rows: Vec<Vec<Cell>> = data
        .iter()
        .map(|row| {
            row.iter()
                .zip(&specs)
                .map(|(raw, spec)| opts.schema.parse_cell(raw, spec.dtype))
                .collect()
        })
        .collect();
    for (c, spec) in specs.iter_mut().enumerate() {
        spec.missing_count = rows.iter().filter(|r| r[c].is_missing()).count();
    }
    Dataset::new_lenient(name, specs, rows)
}

pub fn write_csv_string(ds: &Dataset) -> Result<String, TabularError> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let io = |e: csv::Error| TabularError::IoFailure(e.to_string());
    writer
        .write_record(ds.columns().iter().map(|c| c.name.as_str()))
        .map_err(io)?;
    for row in ds.rows() {
        writer
            .write_record(row.iter().map(Cell::render))
            .map_err(io)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| TabularError::IoFailure(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| TabularError::IoFailure(e.to_string()))
}

pub fn write_csv(ds: &Dataset, path: &Path) -> Result<(), TabularError> {
    let text = write_csv_string(ds)?;
    fs::write(path, text).map_err(|e| TabularError::IoFailure(format!("{}: {e}", path.display())))
}
