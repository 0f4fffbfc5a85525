use super::frame::Frame;
use super::{FittedState, MlError, Operation, OutlierAction, OutlierMethod};
use crate::stats;
use crate::tabular::{Cell, Dataset, LineageEntry};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FittedBounds {
    pub column: String,
    pub lower: f64,
    pub upper: f64,
    pub action: OutlierAction,
}

/// Acceptance interval for one column, computed on observed values only.
/// `None` when the column has no observed value.
pub(crate) fn bounds(values: &[f64], method: OutlierMethod) -> Option<(f64, f64)> {
    let sorted = stats::sorted(values);
    match method {
        OutlierMethod::Iqr { multiplier } => {
            let q1 = stats::quantile_sorted(&sorted, 0.25)?;
            let q3 = stats::quantile_sorted(&sorted, 0.75)?;
            let iqr = q3 - q1;
            Some((q1 - multiplier * iqr, q3 + multiplier * iqr))
        }
        OutlierMethod::ZScore { threshold } => {
            let m = stats::mean(values)?;
            let sd = stats::population_sd(values)?;
            Some((m - threshold * sd, m + threshold * sd))
        }
        OutlierMethod::Quantile { lower, upper } => Some((
            stats::quantile_sorted(&sorted, lower)?,
            stats::quantile_sorted(&sorted, upper)?,
        )),
    }
}

fn treat(cell: &mut Cell, lower: f64, upper: f64, action: OutlierAction) -> bool {
    let Some(v) = cell.as_f64() else { return false };
    if v >= lower && v <= upper {
        return false;
    }
    *cell = match action {
        OutlierAction::SetMissing => Cell::Missing,
        _ => Cell::Numeric(v.clamp(lower, upper)),
    };
    true
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    method: OutlierMethod,
    action: OutlierAction,
    mut entry: LineageEntry,
) -> Result<(Dataset, FittedState), MlError> {
    let mut frame = Frame::new(ds);
    let mut fitted = Vec::new();
    let mut flagged = vec![false; ds.n_rows()];
    for &c in cols {
        let Some((lower, upper)) = bounds(&ds.observed_numeric(c), method) else {
            continue;
        };
        fitted.push(FittedBounds {
            column: ds.columns()[c].name.clone(),
            lower,
            upper,
            action,
        });
        for (r, cell) in frame.cols[c].iter_mut().enumerate() {
            let mut probe = cell.clone();
            if treat(&mut probe, lower, upper, action) {
                flagged[r] = true;
                if action != OutlierAction::RemoveRow {
                    *cell = probe;
                }
            }
        }
    }
    let n_flagged = flagged.iter().filter(|&&f| f).count();
    if action == OutlierAction::RemoveRow {
        let keep: Vec<bool> = flagged.iter().map(|f| !f).collect();
        frame.retain_rows(&keep);
        entry.note = Some(format!("removed {n_flagged} rows"));
    } else {
        entry.note = Some(format!("treated outliers in {n_flagged} rows"));
    }
    let (specs, rows) = frame.finish();
    Ok((ds.derive(entry, specs, rows)?, FittedState::Bounds(fitted)))
}

pub(crate) fn replay(
    frame: &mut Frame,
    fitted: &[FittedBounds],
    skip: &dyn Fn(&str) -> bool,
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    for b in fitted {
        if skip(&b.column) {
            continue;
        }
        let c = frame
            .index(&b.column)
            .ok_or_else(|| MlError::UnknownColumn(b.column.clone()))?;
        // Row removal would break alignment with the caller's rows.
        let action = if b.action == OutlierAction::RemoveRow {
            OutlierAction::Clip
        } else {
            b.action
        };
        for cell in frame.cols[c].iter_mut() {
            treat(cell, b.lower, b.upper, action);
        }
        entry.columns.push(b.column.clone());
    }
    Ok(())
}

pub fn handle_outliers(
    ds: &Dataset,
    cols: &[String],
    method: OutlierMethod,
    action: OutlierAction,
) -> Result<Dataset, MlError> {
    super::apply_operation(ds, &Operation::HandleOutliers { method, action }, cols)
        .map(|a| a.dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Dtype;

    fn ds(values: &[f64]) -> Dataset {
        Dataset::from_columns(
            "d",
            vec![(
                "x",
                Dtype::Numeric,
                values.iter().map(|&v| Cell::Numeric(v)).collect(),
            )],
        )
        .unwrap()
    }

    #[test]
    fn iqr_clip_to_upper_fence() {
        // Sorted 1,2,3,4,100: Q1 = 2, Q3 = 4, upper fence 4 + 1.5 * 2 = 7.
        let out = handle_outliers(
            &ds(&[1.0, 2.0, 3.0, 4.0, 100.0]),
            &["x".into()],
            OutlierMethod::Iqr { multiplier: 1.5 },
            OutlierAction::Clip,
        )
        .unwrap();
        assert_eq!(out.rows()[4][0], Cell::Numeric(7.0));
    }

    #[test]
    fn zscore_within_threshold_is_unchanged() {
        let input = ds(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let out = handle_outliers(
            &input,
            &[],
            OutlierMethod::ZScore { threshold: 3.0 },
            OutlierAction::Clip,
        )
        .unwrap();
        assert!(out.value_eq(&input));
    }

    #[test]
    fn full_quantile_range_flags_nothing() {
        let input = ds(&[-5.0, 1.0, 2.0, 50.0]);
        let m = OutlierMethod::Quantile {
            lower: 0.0,
            upper: 1.0,
        };
        let out = handle_outliers(&input, &[], m, OutlierAction::RemoveRow).unwrap();
        assert!(out.value_eq(&input));
    }

    #[test]
    fn remove_row_and_set_missing() {
        let input = ds(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        let m = OutlierMethod::Iqr { multiplier: 1.5 };
        let out = handle_outliers(&input, &[], m, OutlierAction::RemoveRow).unwrap();
        assert_eq!(out.n_rows(), 4);
        let out = handle_outliers(&input, &[], m, OutlierAction::SetMissing).unwrap();
        assert_eq!(out.missing_total(), 1);
    }
}
