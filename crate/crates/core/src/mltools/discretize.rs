use super::frame::Frame;
use super::{BinMethod, FittedState, MlError, Operation};
use crate::stats;
use crate::tabular::{Cell, Dataset, Dtype, LineageEntry};

/// Interior cut points of a fitted binning. A value falls in bin `i` where
/// `i` is the number of edges `<= v`, so bins are lower-inclusive and the
/// top bin includes the maximum.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FittedBins {
    pub column: String,
    pub edges: Vec<f64>,
}

pub(crate) fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e <= v)
}

pub(crate) fn label(bin: usize) -> String {
    format!("bin_{bin}")
}

fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut d = stats::sorted(values);
    d.dedup();
    d
}

/// Exact 1-D k-means over `values`: returns the cluster of each input
/// value (clusters numbered by increasing centre) and the centres.
///
/// Solved by dynamic programming over the sorted distinct values weighted by
/// multiplicity, minimizing total within-cluster squared error. Among
/// equal-cost partitions the one with the smallest split points wins.
/// `None` when there are fewer than `k` distinct values or `k == 0`.
pub fn kmeans_1d(values: &[f64], k: usize) -> Option<(Vec<usize>, Vec<f64>)> {
    let sorted = stats::sorted(values);
    let mut distinct: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for v in sorted {
        if distinct.last() == Some(&v) {
            let last = weights.len() - 1;
            weights[last] += 1.0;
        } else {
            distinct.push(v);
            weights.push(1.0);
        }
    }
    let m = distinct.len();
    if k == 0 || m < k {
        return None;
    }
    // Prefix sums of weight, weighted value and weighted square.
    let mut pw = vec![0.0; m + 1];
    let mut px = vec![0.0; m + 1];
    let mut pxx = vec![0.0; m + 1];
    for i in 0..m {
        pw[i + 1] = pw[i] + weights[i];
        px[i + 1] = px[i] + weights[i] * distinct[i];
        pxx[i + 1] = pxx[i] + weights[i] * distinct[i] * distinct[i];
    }
    // SSE of distinct[a..b].
    let sse = |a: usize, b: usize| {
        let w = pw[b] - pw[a];
        let s = px[b] - px[a];
        ((pxx[b] - pxx[a]) - s * s / w).max(0.0)
    };
    // cost[j][i]: best SSE of the first i distinct values in j clusters.
    let mut cost = vec![vec![f64::INFINITY; m + 1]; k + 1];
    let mut split = vec![vec![0usize; m + 1]; k + 1];
    cost[0][0] = 0.0;
    for j in 1..=k {
        for i in j..=m {
            for s in (j - 1)..i {
                let c = cost[j - 1][s] + sse(s, i);
                if c < cost[j][i] {
                    cost[j][i] = c;
                    split[j][i] = s;
                }
            }
        }
    }
    let mut starts = vec![0usize; k];
    let mut end = m;
    for j in (1..=k).rev() {
        starts[j - 1] = split[j][end];
        end = split[j][end];
    }
    let mut cluster_of_distinct = vec![0usize; m];
    let mut centres = Vec::with_capacity(k);
    for j in 0..k {
        let a = starts[j];
        let b = if j + 1 < k { starts[j + 1] } else { m };
        cluster_of_distinct[a..b].iter_mut().for_each(|c| *c = j);
        centres.push((px[b] - px[a]) / (pw[b] - pw[a]));
    }
    let assignment = values
        .iter()
        .map(|v| cluster_of_distinct[distinct.partition_point(|d| d < v)])
        .collect();
    Some((assignment, centres))
}

fn fit(
    column: &str,
    values: &[f64],
    method: BinMethod,
) -> Result<(FittedBins, Option<Vec<usize>>), MlError> {
    let n = method.bins();
    let distinct = distinct_sorted(values).len();
    let too_few = || MlError::TooFewDistinct {
        column: column.to_string(),
        distinct,
        bins: n,
    };
    let column = column.to_string();
    match method {
        BinMethod::EqualWidth(_) => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let edges = if values.is_empty() || hi == lo {
                Vec::new()
            } else {
                let width = (hi - lo) / n as f64;
                (1..n).map(|i| lo + i as f64 * width).collect()
            };
            Ok((FittedBins { column, edges }, None))
        }
        BinMethod::Quantile(_) => {
            if distinct < n {
                return Err(too_few());
            }
            let sorted = stats::sorted(values);
            let edges = (1..n)
                .filter_map(|i| stats::quantile_sorted(&sorted, i as f64 / n as f64))
                .collect();
            Ok((FittedBins { column, edges }, None))
        }
        BinMethod::KMeans(_) => {
            let (assignment, centres) = kmeans_1d(values, n).ok_or_else(too_few)?;
            let edges = centres.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
            Ok((FittedBins { column, edges }, Some(assignment)))
        }
    }
}

fn relabel(frame: &mut Frame, c: usize, mut bins: impl FnMut(usize, f64) -> usize) {
    for (r, cell) in frame.cols[c].iter_mut().enumerate() {
        if let Some(v) = cell.as_f64() {
            *cell = Cell::category(label(bins(r, v)));
        }
    }
    frame.specs[c].dtype = Dtype::Categorical;
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    method: BinMethod,
    mut entry: LineageEntry,
) -> Result<(Dataset, FittedState), MlError> {
    let mut frame = Frame::new(ds);
    let mut fitted = Vec::with_capacity(cols.len());
    for &c in cols {
        let values = ds.observed_numeric(c);
        let (bins, assignment) = fit(&ds.columns()[c].name, &values, method)?;
        match assignment {
            // Training rows use the exact partition; edges serve replay.
            Some(assign) => {
                let mut it = assign.into_iter();
                relabel(&mut frame, c, |_, _| it.next().unwrap_or(0));
            }
            None => relabel(&mut frame, c, |_, v| bin_of(&bins.edges, v)),
        }
        entry.retyped.push(bins.column.clone());
        fitted.push(bins);
    }
    let (specs, rows) = frame.finish();
    Ok((ds.derive(entry, specs, rows)?, FittedState::Bins(fitted)))
}

pub(crate) fn replay(
    frame: &mut Frame,
    fitted: &[FittedBins],
    skip: &dyn Fn(&str) -> bool,
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    for b in fitted.iter().filter(|b| !skip(&b.column)) {
        let c = frame
            .index(&b.column)
            .ok_or_else(|| MlError::UnknownColumn(b.column.clone()))?;
        relabel(frame, c, |_, v| bin_of(&b.edges, v));
        entry.columns.push(b.column.clone());
        entry.retyped.push(b.column.clone());
    }
    Ok(())
}

pub fn discretize_features(
    ds: &Dataset,
    cols: &[String],
    method: BinMethod,
) -> Result<Dataset, MlError> {
    super::apply_operation(ds, &Operation::DiscretizeFeatures(method), cols).map(|a| a.dataset)
}
