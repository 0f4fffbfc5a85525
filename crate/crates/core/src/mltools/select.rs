use std::collections::BTreeMap;

use super::discretize::bin_of;
use super::frame::Frame;
use super::{FittedState, MlError, Operation, SelectionMethod};
use crate::stats;
use crate::tabular::{Cell, Dataset, Dtype, LineageEntry, Role};

/// Equal-frequency bins used to discretize numeric columns before mutual
/// information is estimated.
pub const MI_BINS: usize = 10;

/// Plug-in mutual information (nats) of two paired discrete sequences.
pub fn mutual_information<A: Ord, B: Ord>(x: &[A], y: &[B]) -> f64 {
    let n = x.len().min(y.len());
    if n == 0 {
        return 0.0;
    }
    let mut joint: BTreeMap<(&A, &B), f64> = BTreeMap::new();
    let mut px: BTreeMap<&A, f64> = BTreeMap::new();
    let mut py: BTreeMap<&B, f64> = BTreeMap::new();
    for (a, b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_insert(0.0) += 1.0;
        *px.entry(a).or_insert(0.0) += 1.0;
        *py.entry(b).or_insert(0.0) += 1.0;
    }
    let n = n as f64;
    joint
        .iter()
        .map(|((a, b), &c)| {
            let pxy = c / n;
            pxy * (pxy / ((px[a] / n) * (py[b] / n))).ln()
        })
        .sum()
}

/// Discrete codes for one column: numeric values go to equal-frequency
/// bins, other values to their rendering. Missing stays `None`.
fn discrete_codes(ds: &Dataset, c: usize) -> Vec<Option<String>> {
    let cells: Vec<&Cell> = ds.cells(c).collect();
    if ds.columns()[c].dtype == Dtype::Numeric {
        let sorted = stats::sorted(&ds.observed_numeric(c));
        let edges: Vec<f64> = (1..MI_BINS)
            .filter_map(|i| stats::quantile_sorted(&sorted, i as f64 / MI_BINS as f64))
            .collect();
        cells
            .iter()
            .map(|cell| cell.as_f64().map(|v| bin_of(&edges, v).to_string()))
            .collect()
    } else {
        cells
            .iter()
            .map(|cell| (!cell.is_missing()).then(|| cell.render()))
            .collect()
    }
}

fn score(ds: &Dataset, c: usize, t: usize, method: SelectionMethod) -> f64 {
    match method {
        SelectionMethod::Variance(_) => {
            stats::population_variance(&ds.observed_numeric(c)).unwrap_or(0.0)
        }
        SelectionMethod::Correlation { .. } => {
            let (x, y): (Vec<f64>, Vec<f64>) = ds
                .rows()
                .iter()
                .filter_map(|r| Some((r[c].as_f64()?, r[t].as_f64()?)))
                .unzip();
            stats::pearson(&x, &y).map(f64::abs).unwrap_or(0.0)
        }
        SelectionMethod::MutualInfo { .. } => {
            let (x, y): (Vec<String>, Vec<String>) = discrete_codes(ds, c)
                .into_iter()
                .zip(discrete_codes(ds, t))
                .filter_map(|(a, b)| Some((a?, b?)))
                .unzip();
            mutual_information(&x, &y)
        }
    }
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    method: SelectionMethod,
    target: Option<&str>,
    mut entry: LineageEntry,
) -> Result<(Dataset, FittedState, Vec<String>), MlError> {
    let t = match target {
        Some(name) => ds
            .column_index(name)
            .ok_or_else(|| MlError::UnknownColumn(name.to_string()))?,
        None => ds
            .columns()
            .iter()
            .position(|c| c.role == Role::Target)
            .ok_or_else(|| MlError::InvalidParam {
                param: "target".into(),
                reason: "no target column".into(),
            })?,
    };
    let tspec = &ds.columns()[t];
    if matches!(method, SelectionMethod::Correlation { .. })
        && !matches!(tspec.dtype, Dtype::Numeric | Dtype::Boolean)
    {
        return Err(MlError::DtypeMismatch {
            column: tspec.name.clone(),
            expected: "numeric or boolean target".into(),
            found: tspec.dtype,
        });
    }
    let candidates: Vec<usize> = cols.iter().copied().filter(|&c| c != t).collect();
    let scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&c| (c, score(ds, c, t, method)))
        .collect();
    let mut keep: Vec<usize> = match method {
        SelectionMethod::Variance(tau) => scored
            .iter()
            .filter(|(_, s)| *s > tau)
            .map(|(c, _)| *c)
            .collect(),
        SelectionMethod::Correlation { top } | SelectionMethod::MutualInfo { top } => {
            let mut ranked = scored.clone();
            // Stable sort keeps column order among equal scores.
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
            ranked.into_iter().take(top).map(|(c, _)| c).collect()
        }
    };
    keep.sort_unstable();
    let dropped: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|c| !keep.contains(c))
        .collect();

    let mut frame = Frame::new(ds);
    for &c in dropped.iter().rev() {
        frame.remove(c);
    }
    let name = |c: &usize| ds.columns()[*c].name.clone();
    entry.removed = dropped.iter().map(name).collect();
    entry
        .params
        .insert("target".into(), tspec.name.as_str().into());
    entry.note = Some(
        scored
            .iter()
            .map(|(c, s)| format!("{}={s}", ds.columns()[*c].name))
            .collect::<Vec<_>>()
            .join(", "),
    );
    let selected: Vec<String> = keep.iter().map(name).collect();
    let removed = entry.removed.clone();
    let (specs, rows) = frame.finish();
    Ok((
        ds.derive(entry, specs, rows)?,
        FittedState::Drop(removed),
        selected,
    ))
}

/// Keeps the target plus the selected candidate features; returns the
/// dataset and the selected names in column order.
pub fn select_features(
    ds: &Dataset,
    target: &str,
    cols: &[String],
    method: SelectionMethod,
) -> Result<(Dataset, Vec<String>), MlError> {
    let op = Operation::SelectFeatures {
        method,
        target: Some(target.to_string()),
    };
    let applied = super::apply_operation(ds, &op, cols)?;
    Ok((applied.dataset, applied.selected.unwrap_or_default()))
}
