use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Dataset, Dtype, TabularError};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSummary {
    pub cardinality: usize,
    pub top: String,
    pub top_frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub dtype: Dtype,
    /// Observed (non-missing) values.
    pub count: usize,
    pub missing_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categorical: Option<CategoricalSummary>,
}

/// A named statistic backing one of the text elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSummary {
    pub column: String,
    pub elements: Vec<String>,
    pub facts: Vec<Fact>,
}

/// Outlier fence multiplier for the IQR rule.
const IQR_FENCE: f64 = 1.5;
/// Minimum |Spearman rho| for a trend to be reported as monotone.
const TREND_THRESHOLD: f64 = 0.8;

pub fn summarize(ds: &Dataset) -> Vec<ColumnSummary> {
    ds.columns()
        .iter()
        .enumerate()
        .map(|(idx, spec)| {
            let rows = ds.n_rows();
            let missing_fraction = if rows == 0 {
                0.0
            } else {
                spec.missing_count as f64 / rows as f64
            };
            let mut summary = ColumnSummary {
                name: spec.name.clone(),
                dtype: spec.dtype,
                count: rows - spec.missing_count,
                missing_fraction,
                numeric: None,
                categorical: None,
            };
            match spec.dtype {
                Dtype::Numeric => summary.numeric = numeric_summary(&ds.observed_numeric(idx)),
                _ => summary.categorical = categorical_summary(ds, idx),
            }
            summary
        })
        .collect()
}

fn numeric_summary(values: &[f64]) -> Option<NumericSummary> {
    let sorted = stats::sorted(values);
    Some(NumericSummary {
        min: *sorted.first()?,
        max: *sorted.last()?,
        mean: stats::mean(values)?,
        std: stats::population_sd(values)?,
        q1: stats::quantile_sorted(&sorted, 0.25)?,
        median: stats::quantile_sorted(&sorted, 0.5)?,
        q3: stats::quantile_sorted(&sorted, 0.75)?,
    })
}

/// Value counts of a column's observed cells, keyed by rendered value.
pub(crate) fn value_counts(ds: &Dataset, col: usize) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for cell in ds.cells(col).filter(|c| !c.is_missing()) {
        *counts.entry(cell.render()).or_insert(0) += 1;
    }
    counts
}

fn categorical_summary(ds: &Dataset, col: usize) -> Option<CategoricalSummary> {
    let counts = value_counts(ds, col);
    // Highest count wins; ties go to the lexicographically smallest value.
    let (top, freq) =
        counts
            .iter()
            .fold(None, |best: Option<(&String, usize)>, (k, &v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((k, v)),
            })?;
    Some(CategoricalSummary {
        cardinality: counts.len(),
        top: top.clone(),
        top_frequency: freq,
    })
}

/// Data-derived text description of one column: extremes, centre, spread,
/// IQR outliers and, given an ordering column, the monotone trend.
pub fn describe_column(
    ds: &Dataset,
    col: &str,
    order_by: Option<&str>,
) -> Result<TextSummary, TabularError> {
    let idx = ds.require_column(col)?;
    let spec = &ds.columns()[idx];
    let order_idx = match order_by {
        Some(o) => {
            let oi = ds.require_column(o)?;
            let ospec = &ds.columns()[oi];
            if !matches!(ospec.dtype, Dtype::Numeric | Dtype::Boolean) {
                return Err(TabularError::UnsupportedDtype {
                    column: o.to_string(),
                    dtype: ospec.dtype,
                });
            }
            Some(oi)
        }
        None => None,
    };
    let mut out = TextSummary {
        column: col.to_string(),
        elements: Vec::new(),
        facts: Vec::new(),
    };
    let fact = |out: &mut TextSummary, name: &str, value: f64| {
        out.facts.push(Fact {
            name: name.to_string(),
            value,
        });
    };

    match spec.dtype {
        Dtype::Text => {
            return Err(TabularError::UnsupportedDtype {
                column: col.to_string(),
                dtype: spec.dtype,
            })
        }
        Dtype::Numeric => {
            let values = ds.observed_numeric(idx);
            match numeric_summary(&values) {
                None => out.elements.push("all values missing".to_string()),
                Some(s) if s.min == s.max => {
                    out.elements.push(format!("constant value {}", s.min));
                    out.elements.push("no outliers (IQR rule)".to_string());
                    fact(&mut out, "min", s.min);
                    fact(&mut out, "max", s.max);
                    fact(&mut out, "outliers", 0.0);
                }
                Some(s) => {
                    let iqr = s.q3 - s.q1;
                    let lo = s.q1 - IQR_FENCE * iqr;
                    let hi = s.q3 + IQR_FENCE * iqr;
                    let outliers = values.iter().filter(|&&v| v < lo || v > hi).count();
                    out.elements.push(format!("min {}", s.min));
                    out.elements.push(format!("max {}", s.max));
                    out.elements.push(format!("mean {}", s.mean));
                    out.elements.push(format!("median {}", s.median));
                    out.elements.push(format!("standard deviation {}", s.std));
                    out.elements
                        .push(format!("IQR {} (Q1 {}, Q3 {})", iqr, s.q1, s.q3));
                    out.elements.push(match outliers {
                        0 => "no outliers (IQR rule)".to_string(),
                        1 => "1 outlier (IQR rule)".to_string(),
                        n => format!("{n} outliers (IQR rule)"),
                    });
                    for (k, v) in [
                        ("min", s.min),
                        ("max", s.max),
                        ("mean", s.mean),
                        ("median", s.median),
                        ("std", s.std),
                        ("q1", s.q1),
                        ("q3", s.q3),
                        ("iqr", iqr),
                        ("outliers", outliers as f64),
                    ] {
                        fact(&mut out, k, v);
                    }
                }
            }
        }
        Dtype::Categorical | Dtype::Boolean => match categorical_summary(ds, idx) {
            None => out.elements.push("all values missing".to_string()),
            Some(c) => {
                let observed = ds.n_rows() - spec.missing_count;
                out.elements.push(format!(
                    "dominant category {} ({} of {})",
                    c.top, c.top_frequency, observed
                ));
                out.elements
                    .push(format!("{} distinct categories", c.cardinality));
                fact(&mut out, "top_frequency", c.top_frequency as f64);
                fact(&mut out, "cardinality", c.cardinality as f64);
            }
        },
    }

    if spec.missing_count > 0 {
        let frac = spec.missing_count as f64 / ds.n_rows() as f64;
        out.elements.push(format!(
            "{} missing values (fraction {})",
            spec.missing_count, frac
        ));
        fact(&mut out, "missing_fraction", frac);
    }

    if let Some(oi) = order_idx {
        if matches!(spec.dtype, Dtype::Numeric | Dtype::Boolean) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = ds
                .rows()
                .iter()
                .filter_map(|r| Some((r[oi].as_f64()?, r[idx].as_f64()?)))
                .unzip();
            let order_name = &ds.columns()[oi].name;
            match stats::spearman(&xs, &ys) {
                Some(rho) if rho >= TREND_THRESHOLD => {
                    out.elements.push(format!(
                        "increasing trend along {order_name} (Spearman {rho})"
                    ));
                    fact(&mut out, "spearman", rho);
                }
                Some(rho) if rho <= -TREND_THRESHOLD => {
                    out.elements.push(format!(
                        "decreasing trend along {order_name} (Spearman {rho})"
                    ));
                    fact(&mut out, "spearman", rho);
                }
                Some(rho) => {
                    out.elements.push(format!(
                        "no monotone trend along {order_name} (Spearman {rho})"
                    ));
                    fact(&mut out, "spearman", rho);
                }
                None => out
                    .elements
                    .push(format!("no monotone trend along {order_name}")),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Cell;

    fn nums(values: &[f64]) -> Dataset {
        Dataset::from_columns(
            "n",
            vec![
                (
                    "t",
                    Dtype::Numeric,
                    (0..values.len()).map(|i| Cell::Numeric(i as f64)).collect(),
                ),
                (
                    "y",
                    Dtype::Numeric,
                    values.iter().map(|&v| Cell::Numeric(v)).collect(),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn numeric_summary_basic() {
        let s = summarize(&nums(&[1.0, 2.0, 3.0]));
        let y = s[1].numeric.as_ref().unwrap();
        assert_eq!((y.mean, y.min, y.max), (2.0, 1.0, 3.0));
    }

    #[test]
    fn all_missing_column() {
        let ds = Dataset::from_columns(
            "m",
            vec![("a", Dtype::Numeric, vec![Cell::Missing, Cell::Missing])],
        )
        .unwrap();
        let s = &summarize(&ds)[0];
        assert_eq!(s.missing_fraction, 1.0);
        assert!(s.numeric.is_none());
    }

    #[test]
    fn categorical_top() {
        let ds = Dataset::from_columns(
            "c",
            vec![(
                "c",
                Dtype::Categorical,
                ["a", "a", "b"].iter().map(|s| Cell::category(*s)).collect(),
            )],
        )
        .unwrap();
        let c = summarize(&ds)[0].categorical.clone().unwrap();
        assert_eq!(
            (c.cardinality, c.top.as_str(), c.top_frequency),
            (2, "a", 2)
        );
    }

    #[test]
    fn outlier_and_max_elements() {
        // Q1 = 1.75, Q3 = 27.25, upper fence 65.5: only 100 is outside.
        let d = describe_column(&nums(&[1.0, 2.0, 3.0, 100.0]), "y", None).unwrap();
        assert!(d.elements.contains(&"max 100".to_string()));
        assert!(d.elements.contains(&"1 outlier (IQR rule)".to_string()));
    }

    #[test]
    fn constant_column() {
        let d = describe_column(&nums(&[5.0, 5.0, 5.0]), "y", None).unwrap();
        assert!(d.elements.contains(&"constant value 5".to_string()));
        assert!(d.elements.contains(&"no outliers (IQR rule)".to_string()));
    }

    #[test]
    fn increasing_trend() {
        let d = describe_column(&nums(&[1.0, 4.0, 9.0, 16.0]), "y", Some("t")).unwrap();
        assert!(
            d.elements.iter().any(|e| e.starts_with("increasing")),
            "{:?}",
            d.elements
        );
    }

    #[test]
    fn errors() {
        let ds = nums(&[1.0]);
        assert!(matches!(
            describe_column(&ds, "zz", None),
            Err(TabularError::UnknownColumn(_))
        ));
        let t = Dataset::from_columns(
            "t",
            vec![("s", Dtype::Text, vec![Cell::Text("hello".into())])],
        )
        .unwrap();
        assert!(matches!(
            describe_column(&t, "s", None),
            Err(TabularError::UnsupportedDtype { .. })
        ));
    }
}
