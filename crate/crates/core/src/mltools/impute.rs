use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::frame::Frame;
use super::{Aggregate, FillStrategy, FittedState, MlError, Operation};
use crate::stats;
use crate::tabular::{Cell, Dataset, Dtype, LineageEntry, Param, Role};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FittedFill {
    Value {
        column: String,
        value: Cell,
    },
    Knn(KnnImputer),
    Group {
        column: String,
        group_col: String,
        values: BTreeMap<Option<String>, Cell>,
        fallback: Cell,
    },
}

impl FittedFill {
    fn column(&self) -> &str {
        match self {
            FittedFill::Value { column, .. } | FittedFill::Group { column, .. } => column,
            FittedFill::Knn(k) => &k.column,
        }
    }
}

/// Donor rows for KNN imputation of one column, with features already
/// standardized by the fitting data's mean and population SD.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct KnnImputer {
    column: String,
    k: usize,
    features: Vec<String>,
    means: Vec<f64>,
    scales: Vec<f64>,
    donors: Vec<Vec<Option<f64>>>,
    donor_values: Vec<f64>,
}

impl KnnImputer {
    fn standardize(&self, raw: &[Option<f64>]) -> Vec<Option<f64>> {
        raw.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| v.map(|v| (v - m) / s))
            .collect()
    }

    /// Mean of the `k` nearest donors. Distance is the squared Euclidean
    /// distance over features observed on both sides; donors sharing no
    /// feature rank last; ties go to the earlier donor.
    fn predict(&self, query: &[Option<f64>]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .donors
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut shared = 0;
                let mut sum = 0.0;
                for (a, b) in d.iter().zip(query) {
                    if let (Some(a), Some(b)) = (a, b) {
                        shared += 1;
                        sum += (a - b) * (a - b);
                    }
                }
                (if shared == 0 { f64::INFINITY } else { sum }, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let take = self.k.min(dist.len());
        dist[..take]
            .iter()
            .map(|&(_, i)| self.donor_values[i])
            .sum::<f64>()
            / take as f64
    }
}

/// Most frequent observed value; ties go to the smallest value (numeric
/// order for numbers, lexicographic otherwise).
pub(crate) fn mode(cells: &[&Cell]) -> Option<Cell> {
    let mut observed: Vec<&Cell> = cells.iter().copied().filter(|c| !c.is_missing()).collect();
    observed.sort_by(|a, b| cell_order(a, b));
    let mut best: Option<(&Cell, usize)> = None;
    let mut i = 0;
    while i < observed.len() {
        let mut j = i;
        while j < observed.len() && observed[j] == observed[i] {
            j += 1;
        }
        if best.is_none_or(|(_, n)| j - i > n) {
            best = Some((observed[i], j - i));
        }
        i = j;
    }
    best.map(|(c, _)| c.clone())
}

fn cell_order(a: &Cell, b: &Cell) -> Ordering {
    match (a, b) {
        (Cell::Numeric(x), Cell::Numeric(y)) => x.total_cmp(y),
        _ => a.render().cmp(&b.render()),
    }
}

fn aggregate(cells: &[&Cell], agg: Aggregate) -> Option<Cell> {
    let nums = || cells.iter().filter_map(|c| c.as_f64()).collect::<Vec<_>>();
    match agg {
        Aggregate::Mean => stats::mean(&nums()).map(Cell::Numeric),
        Aggregate::Median => stats::quantile(&nums(), 0.5).map(Cell::Numeric),
        Aggregate::Mode => mode(cells),
    }
}

fn constant_cell(value: &Param, dtype: Dtype) -> Cell {
    match (value, dtype) {
        (Param::Number(v), _) => Cell::number(*v),
        (Param::Bool(b), _) => Cell::Boolean(*b),
        (Param::Text(s), Dtype::Text) => Cell::Text(s.clone()),
        (Param::Text(s), _) => Cell::Categorical(s.clone()),
    }
}

fn group_key(cell: &Cell) -> Option<String> {
    (!cell.is_missing()).then(|| cell.render())
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    strategy: &FillStrategy,
    mut entry: LineageEntry,
) -> Result<(Dataset, FittedState), MlError> {
    let group_idx = match strategy {
        FillStrategy::GroupWise { group_col, .. } => Some(
            ds.column_index(group_col)
                .ok_or_else(|| MlError::UnknownColumn(group_col.clone()))?,
        ),
        _ => None,
    };
    let mut fills = Vec::with_capacity(cols.len());
    for &c in cols {
        let spec = &ds.columns()[c];
        let cells: Vec<&Cell> = ds.cells(c).collect();
        let has_observed = cells.iter().any(|c| !c.is_missing());
        if !has_observed && ds.n_rows() > 0 && !matches!(strategy, FillStrategy::Constant(_)) {
            return Err(MlError::AllMissing(spec.name.clone()));
        }
        let fill = match strategy {
            FillStrategy::Mean => aggregate(&cells, Aggregate::Mean),
            FillStrategy::Median => aggregate(&cells, Aggregate::Median),
            FillStrategy::Mode => aggregate(&cells, Aggregate::Mode),
            FillStrategy::Constant(v) => Some(constant_cell(v, spec.dtype)),
            FillStrategy::Knn { k } => {
                fills.push(FittedFill::Knn(fit_knn(ds, c, *k)));
                continue;
            }
            FillStrategy::GroupWise { group_col, agg } => {
                let g = group_idx.unwrap_or_default();
                let mut groups: BTreeMap<Option<String>, Vec<&Cell>> = BTreeMap::new();
                for row in ds.rows() {
                    groups.entry(group_key(&row[g])).or_default().push(&row[c]);
                }
                let fallback = aggregate(&cells, *agg).unwrap_or(Cell::Missing);
                let values = groups
                    .into_iter()
                    .map(|(k, v)| (k, aggregate(&v, *agg).unwrap_or_else(|| fallback.clone())))
                    .collect();
                fills.push(FittedFill::Group {
                    column: spec.name.clone(),
                    group_col: group_col.clone(),
                    values,
                    fallback,
                });
                continue;
            }
        };
        fills.push(FittedFill::Value {
            column: spec.name.clone(),
            value: fill.unwrap_or(Cell::Missing),
        });
    }

    let mut frame = Frame::new(ds);
    let source = frame.clone();
    fill_frame(&mut frame, &source, &fills, &|_| false)?;
    let filled: usize = cols.iter().map(|&c| ds.columns()[c].missing_count).sum();
    entry.note = Some(format!("filled {filled} missing values"));
    let (specs, rows) = frame.finish();
    Ok((ds.derive(entry, specs, rows)?, FittedState::Fill(fills)))
}

fn fit_knn(ds: &Dataset, c: usize, k: usize) -> KnnImputer {
    let feature_idx: Vec<usize> = ds
        .columns()
        .iter()
        .enumerate()
        .filter(|(i, s)| *i != c && s.role == Role::Feature && s.dtype == Dtype::Numeric)
        .map(|(i, _)| i)
        .collect();
    let mut means = Vec::new();
    let mut scales = Vec::new();
    for &f in &feature_idx {
        let obs = ds.observed_numeric(f);
        means.push(stats::mean(&obs).unwrap_or(0.0));
        scales.push(
            stats::population_sd(&obs)
                .filter(|s| *s > 0.0)
                .unwrap_or(1.0),
        );
    }
    let mut imp = KnnImputer {
        column: ds.columns()[c].name.clone(),
        k,
        features: feature_idx
            .iter()
            .map(|&f| ds.columns()[f].name.clone())
            .collect(),
        means,
        scales,
        donors: Vec::new(),
        donor_values: Vec::new(),
    };
    for row in ds.rows() {
        if let Some(v) = row[c].as_f64() {
            let raw: Vec<Option<f64>> = feature_idx.iter().map(|&f| row[f].as_f64()).collect();
            imp.donors.push(imp.standardize(&raw));
            imp.donor_values.push(v);
        }
    }
    imp
}

/// Fills `frame` in place. Lookups (group keys, KNN features) read from
/// `source` so that one filled column never feeds another.
fn fill_frame(
    frame: &mut Frame,
    source: &Frame,
    fills: &[FittedFill],
    skip: &dyn Fn(&str) -> bool,
) -> Result<(), MlError> {
    for fill in fills {
        let name = fill.column();
        if skip(name) {
            continue;
        }
        let c = frame
            .index(name)
            .ok_or_else(|| MlError::UnknownColumn(name.to_string()))?;
        match fill {
            FittedFill::Value { value, .. } => {
                for cell in frame.cols[c].iter_mut().filter(|c| c.is_missing()) {
                    *cell = value.clone();
                }
            }
            FittedFill::Group {
                group_col,
                values,
                fallback,
                ..
            } => {
                let g = source
                    .index(group_col)
                    .ok_or_else(|| MlError::UnknownColumn(group_col.clone()))?;
                for (r, cell) in frame.cols[c].iter_mut().enumerate() {
                    if cell.is_missing() {
                        *cell = values
                            .get(&group_key(&source.cols[g][r]))
                            .unwrap_or(fallback)
                            .clone();
                    }
                }
            }
            FittedFill::Knn(imp) => {
                let feats = imp
                    .features
                    .iter()
                    .map(|f| {
                        source
                            .index(f)
                            .ok_or_else(|| MlError::UnknownColumn(f.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if imp.donors.is_empty() {
                    continue;
                }
                for r in 0..frame.n_rows() {
                    if frame.cols[c][r].is_missing() {
                        let raw: Vec<Option<f64>> =
                            feats.iter().map(|&f| source.cols[f][r].as_f64()).collect();
                        frame.cols[c][r] = Cell::number(imp.predict(&imp.standardize(&raw)));
                    }
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn replay(
    frame: &mut Frame,
    fills: &[FittedFill],
    skip: &dyn Fn(&str) -> bool,
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    let source = frame.clone();
    fill_frame(frame, &source, fills, skip)?;
    entry.columns = fills
        .iter()
        .map(|f| f.column().to_string())
        .filter(|c| !skip(c))
        .collect();
    Ok(())
}

/// Fills missing values in `cols` (all eligible feature columns when empty).
pub fn fill_missing(
    ds: &Dataset,
    cols: &[String],
    strategy: FillStrategy,
) -> Result<Dataset, MlError> {
    super::apply_operation(ds, &Operation::FillMissing(strategy), cols).map(|a| a.dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(v: &[Option<f64>]) -> Vec<Cell> {
        v.iter()
            .map(|x| x.map(Cell::Numeric).unwrap_or(Cell::Missing))
            .collect()
    }

    #[test]
    fn mean_fill() {
        let ds = Dataset::from_columns(
            "d",
            vec![(
                "a",
                Dtype::Numeric,
                num(&[Some(1.0), Some(2.0), None, Some(3.0)]),
            )],
        )
        .unwrap();
        let out = fill_missing(&ds, &["a".into()], FillStrategy::Mean).unwrap();
        assert_eq!(out.rows()[2][0], Cell::Numeric(2.0));
        assert_eq!(out.lineage().len(), 1);
        assert_eq!(ds.missing_total(), 1);
    }

    #[test]
    fn group_wise_mean() {
        let ds = Dataset::from_columns(
            "d",
            vec![
                (
                    "g",
                    Dtype::Categorical,
                    vec![
                        Cell::category("A"),
                        Cell::category("A"),
                        Cell::category("B"),
                    ],
                ),
                ("x", Dtype::Numeric, num(&[Some(1.0), None, Some(3.0)])),
            ],
        )
        .unwrap();
        let s = FillStrategy::GroupWise {
            group_col: "g".into(),
            agg: Aggregate::Mean,
        };
        let out = fill_missing(&ds, &["x".into()], s).unwrap();
        assert_eq!(out.rows()[1][1], Cell::Numeric(1.0));
    }

    #[test]
    fn group_wise_falls_back_for_all_missing_group() {
        let ds = Dataset::from_columns(
            "d",
            vec![
                (
                    "g",
                    Dtype::Categorical,
                    vec![
                        Cell::category("A"),
                        Cell::category("B"),
                        Cell::category("B"),
                    ],
                ),
                ("x", Dtype::Numeric, num(&[Some(4.0), None, None])),
            ],
        )
        .unwrap();
        let s = FillStrategy::GroupWise {
            group_col: "g".into(),
            agg: Aggregate::Median,
        };
        let out = fill_missing(&ds, &["x".into()], s).unwrap();
        assert_eq!(out.rows()[2][1], Cell::Numeric(4.0));
        assert_eq!(out.missing_total(), 0);
    }

    #[test]
    fn knn_uses_nearest_standardized_row() {
        let ds = Dataset::from_columns(
            "d",
            vec![
                (
                    "f1",
                    Dtype::Numeric,
                    num(&[Some(0.0), Some(10.0), Some(0.1)]),
                ),
                (
                    "f2",
                    Dtype::Numeric,
                    num(&[Some(0.0), Some(10.0), Some(0.0)]),
                ),
                ("t", Dtype::Numeric, num(&[Some(7.0), Some(-3.0), None])),
            ],
        )
        .unwrap();
        let out = fill_missing(&ds, &["t".into()], FillStrategy::Knn { k: 1 }).unwrap();
        assert_eq!(out.rows()[2][2], Cell::Numeric(7.0));
    }

    #[test]
    fn mode_ties_and_all_missing() {
        let ds = Dataset::from_columns(
            "d",
            vec![
                (
                    "c",
                    Dtype::Categorical,
                    vec![Cell::category("b"), Cell::category("a"), Cell::Missing],
                ),
                (
                    "m",
                    Dtype::Numeric,
                    vec![Cell::Missing, Cell::Missing, Cell::Missing],
                ),
            ],
        )
        .unwrap();
        let out = fill_missing(&ds, &["c".into()], FillStrategy::Mode).unwrap();
        assert_eq!(out.rows()[2][0], Cell::category("a"));
        assert_eq!(
            fill_missing(&ds, &["m".into()], FillStrategy::Mean),
            Err(MlError::AllMissing("m".into()))
        );
        let out = fill_missing(
            &ds,
            &["m".into()],
            FillStrategy::Constant(Param::Number(0.0)),
        )
        .unwrap();
        assert_eq!(out.missing_total(), 1);
    }

    #[test]
    fn constant_type_must_match() {
        let ds = Dataset::from_columns("d", vec![("a", Dtype::Numeric, num(&[None]))]).unwrap();
        let r = fill_missing(
            &ds,
            &["a".into()],
            FillStrategy::Constant(Param::Text("x".into())),
        );
        assert!(matches!(r, Err(MlError::InvalidParam { .. })));
    }
}
