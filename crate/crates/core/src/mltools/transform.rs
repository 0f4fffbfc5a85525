use super::frame::Frame;
use super::{FittedState, MlError, Operation, Transform};
use crate::stats;
use crate::tabular::{Cell, Dataset, LineageEntry};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FittedTransform {
    Log1p {
        column: String,
    },
    /// `(v - shift) / scale`; identity for constant columns.
    Affine {
        column: String,
        shift: f64,
        scale: f64,
    },
}

impl FittedTransform {
    fn column(&self) -> &str {
        match self {
            FittedTransform::Log1p { column } | FittedTransform::Affine { column, .. } => column,
        }
    }
}

fn fit(column: &str, values: &[f64], t: Transform) -> FittedTransform {
    let column = column.to_string();
    let identity = FittedTransform::Affine {
        column: column.clone(),
        shift: 0.0,
        scale: 1.0,
    };
    match t {
        Transform::Log1p => FittedTransform::Log1p { column },
        Transform::MinMax => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if values.is_empty() || hi == lo {
                identity
            } else {
                FittedTransform::Affine {
                    column,
                    shift: lo,
                    scale: hi - lo,
                }
            }
        }
        Transform::Standard => match (stats::mean(values), stats::population_sd(values)) {
            (Some(m), Some(sd)) if sd > 0.0 => FittedTransform::Affine {
                column,
                shift: m,
                scale: sd,
            },
            _ => identity,
        },
    }
}

fn transform(frame: &mut Frame, t: &FittedTransform) -> Result<(), MlError> {
    let name = t.column();
    let c = frame
        .index(name)
        .ok_or_else(|| MlError::UnknownColumn(name.to_string()))?;
    if let FittedTransform::Log1p { .. } = t {
        if let Some(v) = frame.cols[c]
            .iter()
            .filter_map(Cell::as_f64)
            .find(|&v| v <= -1.0)
        {
            return Err(MlError::DomainError {
                column: name.to_string(),
                reason: format!("log1p undefined at {v}"),
            });
        }
    }
    for cell in frame.cols[c].iter_mut() {
        if let Some(v) = cell.as_f64() {
            *cell = Cell::number(match t {
                FittedTransform::Log1p { .. } => v.ln_1p(),
                FittedTransform::Affine { shift, scale, .. } => (v - shift) / scale,
            });
        }
    }
    Ok(())
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    t: Transform,
    entry: LineageEntry,
) -> Result<(Dataset, FittedState), MlError> {
    let mut frame = Frame::new(ds);
    let mut fitted = Vec::with_capacity(cols.len());
    for &c in cols {
        let f = fit(&ds.columns()[c].name, &ds.observed_numeric(c), t);
        transform(&mut frame, &f)?;
        fitted.push(f);
    }
    let (specs, rows) = frame.finish();
    Ok((
        ds.derive(entry, specs, rows)?,
        FittedState::Transform(fitted),
    ))
}

pub(crate) fn replay(
    frame: &mut Frame,
    fitted: &[FittedTransform],
    skip: &dyn Fn(&str) -> bool,
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    for t in fitted.iter().filter(|t| !skip(t.column())) {
        transform(frame, t)?;
        entry.columns.push(t.column().to_string());
    }
    Ok(())
}

pub fn transform_features(ds: &Dataset, cols: &[String], t: Transform) -> Result<Dataset, MlError> {
    super::apply_operation(ds, &Operation::TransformFeatures(t), cols).map(|a| a.dataset)
}
