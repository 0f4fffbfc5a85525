use nalgebra::{DMatrix, SymmetricEigen};

use super::frame::Frame;
use super::{FittedState, MlError, Operation};
use crate::tabular::{Cell, ColumnSpec, Dataset, Dtype, LineageEntry};

/// Principal axes of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub means: Vec<f64>,
    /// Unit loading vectors, one per component, by descending variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Trace of the covariance matrix.
    pub total_variance: f64,
}

impl PcaFit {
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|w| {
                w.iter()
                    .zip(row.iter().zip(&self.means))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect()
    }
}

/// PCA of `rows` (n × p, n ≥ 1) from the eigendecomposition of the
/// population (1/n) covariance matrix. Each component's sign makes its
/// largest-magnitude loading positive (the first such loading on ties).
pub fn pca_fit(rows: &[Vec<f64>], n_components: usize) -> PcaFit {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    let means: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n.max(1) as f64)
        .collect();
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for r in rows {
        for i in 0..p {
            for j in i..p {
                cov[(i, j)] += (r[i] - means[i]) * (r[j] - means[j]);
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            cov[(i, j)] /= n.max(1) as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut components = Vec::new();
    let mut explained_variance = Vec::new();
    for &k in order.iter().take(n_components) {
        let mut w: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let lead = w.iter().enumerate().fold(
            0,
            |best, (i, v)| if v.abs() > w[best].abs() { i } else { best },
        );
        if w[lead] < 0.0 {
            w.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(w);
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }
    PcaFit {
        means,
        components,
        explained_variance,
        total_variance,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FittedProjection {
    columns: Vec<String>,
    fit: PcaFit,
}

pub(crate) fn component_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("pc_{i}")).collect()
}

/// Replaces the source columns by their projections, inserted where the
/// first source column stood.
fn project(
    frame: &mut Frame,
    proj: &FittedProjection,
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    let idx = proj
        .columns
        .iter()
        .map(|c| {
            frame
                .index(c)
                .ok_or_else(|| MlError::UnknownColumn(c.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut data = vec![Vec::with_capacity(idx.len()); frame.n_rows()];
    for (&c, name) in idx.iter().zip(&proj.columns) {
        for (r, cell) in frame.cols[c].iter().enumerate() {
            data[r].push(
                cell.as_f64()
                    .ok_or_else(|| MlError::MissingValuesPresent(name.clone()))?,
            );
        }
    }
    let scores: Vec<Vec<f64>> = data.iter().map(|r| proj.fit.project(r)).collect();
    let at = *idx.iter().min().unwrap_or(&0);
    let mut sorted_idx = idx.clone();
    sorted_idx.sort_unstable();
    for &c in sorted_idx.iter().rev() {
        frame.remove(c);
    }
    for (k, name) in component_names(proj.fit.components.len())
        .into_iter()
        .enumerate()
    {
        let cells = scores.iter().map(|s| Cell::number(s[k])).collect();
        frame.insert(at + k, ColumnSpec::new(&name, Dtype::Numeric), cells);
        entry.added.push(name);
    }
    entry.removed.extend(proj.columns.iter().cloned());
    Ok(())
}

pub(crate) fn apply(
    ds: &Dataset,
    cols: &[usize],
    n_components: usize,
    mut entry: LineageEntry,
) -> Result<(Dataset, FittedState), MlError> {
    if n_components > cols.len() {
        return Err(MlError::InvalidParam {
            param: "n_components".into(),
            reason: format!("{n_components} exceeds the {} selected columns", cols.len()),
        });
    }
    if ds.n_rows() == 0 {
        return Err(MlError::InvalidParam {
            param: "n_components".into(),
            reason: "dataset has no rows".into(),
        });
    }
    let mut rows = vec![Vec::with_capacity(cols.len()); ds.n_rows()];
    for &c in cols {
        for (r, cell) in ds.cells(c).enumerate() {
            rows[r].push(
                cell.as_f64()
                    .ok_or_else(|| MlError::MissingValuesPresent(ds.columns()[c].name.clone()))?,
            );
        }
    }
    let fit = pca_fit(&rows, n_components);
    let explained: Vec<String> = fit
        .explained_variance
        .iter()
        .map(|v| format!("{v}"))
        .collect();
    let proj = FittedProjection {
        columns: cols.iter().map(|&c| ds.columns()[c].name.clone()).collect(),
        fit,
    };
    let mut frame = Frame::new(ds);
    project(&mut frame, &proj, &mut entry)?;
    entry.note = Some(format!("explained variance [{}]", explained.join(", ")));
    let (specs, rows) = frame.finish();
    Ok((ds.derive(entry, specs, rows)?, FittedState::Project(proj)))
}

pub(crate) fn replay(
    frame: &mut Frame,
    proj: &FittedProjection,
    entry: &mut LineageEntry,
) -> Result<(), MlError> {
    entry.columns = proj.columns.clone();
    project(frame, proj, entry)
}

pub fn reduce_dimensions(
    ds: &Dataset,
    cols: &[String],
    n_components: usize,
) -> Result<Dataset, MlError> {
    super::apply_operation(ds, &Operation::ReduceDimensions { n_components }, cols)
        .map(|a| a.dataset)
}
