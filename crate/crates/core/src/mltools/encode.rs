use std::collections::BTreeMap;

use super::frame::Frame;
use super::{EncodingScheme, FittedState, MlError, Operation};
use crate::tabular::{Cell, ColumnSpec, Dataset, Dtype, LineageEntry};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FittedEncoding {
    /// Categories in code order (lexicographic).
    Label {
        column: String,
        categories: Vec<String>,
    },
    OneHot {
        column: String,
        categories: Vec<String>,
    },
    Frequency {
        column: String,
        freq: BTreeMap<String, f64>,
    },
}

impl FittedEncoding {
    fn column(&self) -> &str {
        match self {
            FittedEncoding::Label { column, .. }
            | FittedEncoding::OneHot { column, .. }
            | FittedEncoding::Frequency { column, .. } => column,
        }
    }
}

pub(crate) fn indicator_name(column: &str, category: &str) -> String {
    format!("{column}={category}")
}

fn counts(cells: &[Cell]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for c in cells.iter().filter(|c| !c.is_missing()) {
        *out.entry(c.render()).or_insert(0) += 1;
    }
    out
}

fn fit(column: &str, cells: &[Cell], scheme: EncodingScheme) -> Result<FittedEncoding, MlError> {
    let counts = counts(cells);
    let column = column.to_string();
    Ok(match scheme {
        EncodingScheme::Label => FittedEncoding::Label {
            column,
            categories: counts.into_keys().collect(),
        },
        EncodingScheme::OneHot { max_cardinality } => {
            if counts.len() > max_cardinality {
                return Err(MlError::CardinalityExceeded {
                    column,
                    cardinality: counts.len(),
                    max: max_cardinality,
                });
            }
            FittedEncoding::OneHot {
                column,
                categories: counts.into_keys().collect(),
            }
        }
        EncodingScheme::Frequency => {
            let total: usize = counts.values().sum();
            let freq = counts
                .into_iter()
                .map(|(k, n)| (k, n as f64 / total as f64))
                .collect();
            FittedEncoding::Frequency { column, freq }
        }
    })
}

/// Rewrites one column of `frame` per `enc`. Categories not seen when
/// fitting map to Missing (label), 0 (frequency) or all-zero indicators.
fn encode(
    frame: &mut Frame,
    enc: &FittedEncoding,
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    let name = enc.column();
    let c = frame
        .index(name)
        .ok_or_else(|| MlError::UnknownColumn(name.to_string()))?;
    match enc {
        FittedEncoding::Label { categories, .. } => {
            for cell in frame.cols[c].iter_mut().filter(|c| !c.is_missing()) {
                let key = cell.render();
                *cell = match categories.binary_search(&key) {
                    Ok(code) => Cell::Numeric(code as f64),
                    Err(_) => Cell::Missing,
                };
            }
            frame.specs[c].dtype = Dtype::Numeric;
            entry.retyped.push(name.to_string());
        }
        FittedEncoding::Frequency { freq, .. } => {
            for cell in frame.cols[c].iter_mut().filter(|c| !c.is_missing()) {
                *cell = Cell::Numeric(freq.get(&cell.render()).copied().unwrap_or(0.0));
            }
            frame.specs[c].dtype = Dtype::Numeric;
            entry.retyped.push(name.to_string());
        }
        FittedEncoding::OneHot { categories, .. } => {
            let (spec, cells) = frame.remove(c);
            let keys: Vec<Option<String>> = cells
                .iter()
                .map(|c| (!c.is_missing()).then(|| c.render()))
                .collect();
            for (offset, cat) in categories.iter().enumerate() {
                let col_name = indicator_name(name, cat);
                let values = keys
                    .iter()
                    .map(|k| {
                        Cell::Numeric(if k.as_deref() == Some(cat.as_str()) {
                            1.0
                        } else {
                            0.0
                        })
                    })
                    .collect();
                frame.insert(
                    c + offset,
                    ColumnSpec::new(&col_name, Dtype::Numeric).with_role(spec.role),
                    values,
                );
                entry.added.push(col_name);
            }
            entry.removed.push(name.to_string());
        }
    }
    Ok(())
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    scheme: EncodingScheme,
    mut entry: LineageEntry,
) -> Result<(Dataset, FittedState), MlError> {
    let mut frame = Frame::new(ds);
    let mut fitted = Vec::with_capacity(cols.len());
    for &c in cols {
        fitted.push(fit(&ds.columns()[c].name, &frame.cols[c], scheme)?);
    }
    for enc in &fitted {
        encode(&mut frame, enc, &mut entry)?;
    }
    let (specs, rows) = frame.finish();
    Ok((ds.derive(entry, specs, rows)?, FittedState::Encode(fitted)))
}

pub(crate) fn replay(
    frame: &mut Frame,
    fitted: &[FittedEncoding],
    skip: &dyn Fn(&str) -> bool,
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    for enc in fitted {
        if skip(enc.column()) {
            continue;
        }
        entry.columns.push(enc.column().to_string());
        encode(frame, enc, entry)?;
    }
    Ok(())
}

pub fn encode_categorical(
    ds: &Dataset,
    cols: &[String],
    scheme: EncodingScheme,
) -> Result<Dataset, MlError> {
    super::apply_operation(ds, &Operation::EncodeCategorical(scheme), cols).map(|a| a.dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cats(values: &[&str]) -> Dataset {
        Dataset::from_columns(
            "d",
            vec![(
                "c",
                Dtype::Categorical,
                values.iter().map(|s| Cell::category(*s)).collect(),
            )],
        )
        .unwrap()
    }

    #[test]
    fn one_hot_lexicographic_indicators() {
        let out = encode_categorical(
            &cats(&["red", "blue", "red"]),
            &[],
            EncodingScheme::OneHot {
                max_cardinality: 50,
            },
        )
        .unwrap();
        assert_eq!(out.column_names(), vec!["c=blue", "c=red"]);
        for row in out.rows() {
            assert_eq!(row.iter().filter_map(Cell::as_f64).sum::<f64>(), 1.0);
        }
        let lin = &out.lineage()[0];
        assert_eq!(lin.removed, vec!["c"]);
    }

    #[test]
    fn label_codes() {
        let out = encode_categorical(&cats(&["b", "a"]), &[], EncodingScheme::Label).unwrap();
        assert_eq!(out.rows()[0][0], Cell::Numeric(1.0));
        assert_eq!(out.rows()[1][0], Cell::Numeric(0.0));
    }

    #[test]
    fn frequency_and_cardinality() {
        let out =
            encode_categorical(&cats(&["a", "a", "b"]), &[], EncodingScheme::Frequency).unwrap();
        assert_eq!(out.rows()[0][0], Cell::Numeric(2.0 / 3.0));
        assert_eq!(out.rows()[2][0], Cell::Numeric(1.0 / 3.0));
        let err = encode_categorical(
            &cats(&["a", "b", "c"]),
            &[],
            EncodingScheme::OneHot { max_cardinality: 2 },
        );
        assert!(matches!(
            err,
            Err(MlError::CardinalityExceeded { cardinality: 3, .. })
        ));
    }

    #[test]
    fn missing_encodings() {
        let ds = Dataset::from_columns(
            "d",
            vec![(
                "c",
                Dtype::Categorical,
                vec![Cell::category("a"), Cell::Missing],
            )],
        )
        .unwrap();
        let out =
            encode_categorical(&ds, &[], EncodingScheme::OneHot { max_cardinality: 5 }).unwrap();
        assert_eq!(out.rows()[1][0], Cell::Numeric(0.0));
        let out = encode_categorical(&ds, &[], EncodingScheme::Label).unwrap();
        assert_eq!(out.rows()[1][0], Cell::Missing);
    }

    #[test]
    fn numeric_column_rejected() {
        let ds = Dataset::from_columns("d", vec![("x", Dtype::Numeric, vec![Cell::Numeric(1.0)])])
            .unwrap();
        let err = encode_categorical(&ds, &["x".into()], EncodingScheme::Label);
        assert!(matches!(err, Err(MlError::DtypeMismatch { .. })));
    }
}
