use super::frame::Frame;
use super::{FittedState, MlError, Operation};
use crate::tabular::{Cell, ColumnSpec, Dataset, Dtype, LineageEntry};

/// One generated monomial: its column name and factor columns (repeated
/// for powers).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Term {
    pub name: String,
    pub factors: Vec<String>,
}

/// Index multisets of total degree 2..=`degree` over `n` variables, ordered
/// by degree and then lexicographically. With `interactions_only`, only
/// products of distinct variables.
pub fn monomials(n: usize, degree: usize, interactions_only: bool) -> Vec<Vec<usize>> {
    fn rec(
        start: usize,
        n: usize,
        left: usize,
        distinct: bool,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(
                if distinct { i + 1 } else { i },
                n,
                left - 1,
                distinct,
                cur,
                out,
            );
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for d in 2..=degree {
        rec(0, n, d, interactions_only, &mut Vec::new(), &mut out);
    }
    out
}

pub(crate) fn term_name(names: &[&str], idx: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && idx[j] == idx[i] {
            j += 1;
        }
        let name = names[idx[i]];
        parts.push(if j - i == 1 {
            name.to_string()
        } else {
            format!("{name}^{}", j - i)
        });
        i = j;
    }
    parts.join("*")
}

fn evaluate(frame: &mut Frame, terms: &[Term]) -> Result<Vec<String>, MlError> {
    let mut added = Vec::with_capacity(terms.len());
    for t in terms {
        let cols = t
            .factors
            .iter()
            .map(|f| {
                frame
                    .index(f)
                    .map(|i| frame.numeric(i))
                    .ok_or_else(|| MlError::UnknownColumn(f.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cells = (0..frame.n_rows())
            .map(|r| {
                cols.iter()
                    .try_fold(1.0, |acc, c| c[r].map(|v| acc * v))
                    .map(Cell::number)
                    .unwrap_or(Cell::Missing)
            })
            .collect();
        frame.push(ColumnSpec::new(&t.name, Dtype::Numeric), cells);
        added.push(t.name.clone());
    }
    Ok(added)
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    degree: usize,
    interactions_only: bool,
    max_columns: usize,
    mut entry: LineageEntry,
) -> Result<(Dataset, FittedState), MlError> {
    let names: Vec<&str> = cols
        .iter()
        .map(|&c| ds.columns()[c].name.as_str())
        .collect();
    let monos = monomials(names.len(), degree, interactions_only);
    let count = ds.n_cols() + monos.len();
    if count > max_columns {
        return Err(MlError::TooManyColumns {
            count,
            cap: max_columns,
        });
    }
    let terms: Vec<Term> = monos
        .iter()
        .map(|m| Term {
            name: term_name(&names, m),
            factors: m.iter().map(|&i| names[i].to_string()).collect(),
        })
        .collect();
    let mut frame = Frame::new(ds);
    entry.added = evaluate(&mut frame, &terms)?;
    let (specs, rows) = frame.finish();
    Ok((
        ds.derive(entry, specs, rows)?,
        FittedState::Polynomial(terms),
    ))
}

pub(crate) fn replay(
    frame: &mut Frame,
    terms: &[Term],
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    entry.added = evaluate(frame, terms)?;
    Ok(())
}

pub fn create_polynomial_features(
    ds: &Dataset,
    cols: &[String],
    degree: usize,
    interactions_only: bool,
) -> Result<Dataset, MlError> {
    let op = Operation::PolynomialFeatures {
        degree,
        interactions_only,
        max_columns: super::DEFAULT_MAX_COLUMNS,
    };
    super::apply_operation(ds, &op, cols).map(|a| a.dataset)
}
