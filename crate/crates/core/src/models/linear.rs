use serde::{Deserialize, Serialize};

use super::ModelError;

/// Relative pivot floor below which the normal equations count as singular.
const PIVOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl RidgeModel {
    /// Ridge regression with an unpenalized intercept, solved on centred data
    /// so the intercept is `mean(y) - mean(x)·w`.
    pub fn fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<RidgeModel, ModelError> {
        let n = x.len() as f64;
        let p = x.first().map_or(0, Vec::len);
        let x_mean: Vec<f64> = (0..p)
            .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let y_mean = y.iter().sum::<f64>() / n;
        let mut gram = vec![vec![0.0; p]; p];
        let mut rhs = vec![0.0; p];
        for (row, &yi) in x.iter().zip(y) {
            let c: Vec<f64> = row.iter().zip(&x_mean).map(|(v, m)| v - m).collect();
            for a in 0..p {
                rhs[a] += c[a] * (yi - y_mean);
                for b in 0..=a {
                    gram[a][b] += c[a] * c[b];
                }
            }
        }
        for a in 0..p {
            gram[a][a] += lambda;
            for b in 0..a {
                gram[b][a] = gram[a][b];
            }
        }
        let coefficients = solve_ridge(&gram, &rhs)?;
        let intercept = y_mean
            - coefficients
                .iter()
                .zip(&x_mean)
                .map(|(w, m)| w * m)
                .sum::<f64>();
        Ok(RidgeModel {
            intercept,
            coefficients,
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }
}

/// Solves `a·w = b` for symmetric positive-definite `a` by Cholesky
/// factorization. A pivot at or below `1e-10 · max(1, max diag)` is reported
/// as [`ModelError::SingularSystem`].
pub fn solve_ridge(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, ModelError> {
    let p = b.len();
    let scale = a
        .iter()
        .enumerate()
        .map(|(i, r)| r[i].abs())
        .fold(1.0, f64::max);
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= PIVOT_TOLERANCE * scale {
                    return Err(ModelError::SingularSystem);
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        z[i] = (b[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
    }
    let mut w = vec![0.0; p];
    for i in (0..p).rev() {
        w[i] = (z[i] - (i + 1..p).map(|k| l[k][i] * w[k]).sum::<f64>()) / l[i][i];
    }
    Ok(w)
}
