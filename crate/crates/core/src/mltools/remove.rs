use super::frame::Frame;
use super::{FittedState, MlError, Operation, RemovalCriterion};
use crate::stats;
use crate::tabular::{Dataset, Dtype, LineageEntry, Role};

/// Columns (by index, ascending) that `criterion` drops among `cols`, each
/// with a short reason.
fn victims(ds: &Dataset, cols: &[usize], criterion: RemovalCriterion) -> Vec<(usize, String)> {
    let rows = ds.n_rows().max(1) as f64;
    let numeric: Vec<usize> = cols
        .iter()
        .copied()
        .filter(|&c| ds.columns()[c].dtype == Dtype::Numeric)
        .collect();
    match criterion {
        RemovalCriterion::Explicit => cols.iter().map(|&c| (c, "listed".to_string())).collect(),
        RemovalCriterion::MissingFraction(t) => cols
            .iter()
            .filter_map(|&c| {
                let frac = ds.columns()[c].missing_count as f64 / rows;
                (frac > t).then(|| (c, format!("missing fraction {frac}")))
            })
            .collect(),
        RemovalCriterion::Variance(t) => numeric
            .iter()
            .filter_map(|&c| {
                let var = stats::population_variance(&ds.observed_numeric(c)).unwrap_or(0.0);
                (var < t).then(|| (c, format!("variance {var}")))
            })
            .collect(),
        RemovalCriterion::Correlation(t) => {
            let cols_data: Vec<Vec<Option<f64>>> =
                numeric.iter().map(|&c| ds.numeric_column(c)).collect();
            let mut dropped = vec![false; numeric.len()];
            let mut out = Vec::new();
            for j in 0..numeric.len() {
                for i in 0..j {
                    if dropped[i] {
                        continue;
                    }
                    let (x, y): (Vec<f64>, Vec<f64>) = cols_data[i]
                        .iter()
                        .zip(&cols_data[j])
                        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                        .unzip();
                    if let Some(r) = stats::pearson(&x, &y) {
                        if r.abs() > t {
                            dropped[j] = true;
                            let other = &ds.columns()[numeric[i]].name;
                            out.push((numeric[j], format!("|r| {} with {other}", r.abs())));
                            break;
                        }
                    }
                }
            }
            out
        }
    }
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    criterion: RemovalCriterion,
    mut entry: LineageEntry,
) -> Result<(Dataset, FittedState), MlError> {
    let victims = victims(ds, cols, criterion);
    if let Some((c, _)) = victims
        .iter()
        .find(|(c, _)| ds.columns()[*c].role == Role::Target)
    {
        return Err(MlError::WouldDropTarget(ds.columns()[*c].name.clone()));
    }
    let mut frame = Frame::new(ds);
    let mut notes = Vec::new();
    for (c, reason) in victims.iter().rev() {
        frame.remove(*c);
        notes.push(format!("{}: {reason}", ds.columns()[*c].name));
    }
    notes.reverse();
    entry.removed = victims
        .iter()
        .map(|(c, _)| ds.columns()[*c].name.clone())
        .collect();
    entry.note = Some(if notes.is_empty() {
        "nothing removed".into()
    } else {
        notes.join("; ")
    });
    let dropped = entry.removed.clone();
    let (specs, rows) = frame.finish();
    Ok((ds.derive(entry, specs, rows)?, FittedState::Drop(dropped)))
}

pub fn remove_columns(
    ds: &Dataset,
    cols: &[String],
    criterion: RemovalCriterion,
) -> Result<Dataset, MlError> {
    super::apply_operation(ds, &Operation::RemoveColumns(criterion), cols).map(|a| a.dataset)
}
