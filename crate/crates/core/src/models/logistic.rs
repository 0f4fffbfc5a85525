use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{standardize, standardizer};

/// Logistic regression on standardized features, trained by full-batch
/// gradient descent from zero weights. Two classes use one model for the
/// lexicographically larger label; more use one-vs-rest with argmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub classes: Vec<String>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// `[bias, w_1, .., w_p]` per fitted one-vs-rest model.
    pub weights: Vec<Vec<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn linear(params: &[f64], row: &[f64]) -> f64 {
    params[0] + params[1..].iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
}

/// Mean log-loss plus `lambda/2 · ‖w‖²` (bias unpenalized) and its gradient.
/// `params[0]` is the bias; `y` holds 0/1 labels.
pub fn logistic_loss_grad(
    x: &[Vec<f64>],
    y: &[f64],
    params: &[f64],
    lambda: f64,
) -> (f64, Vec<f64>) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (row, &yi) in x.iter().zip(y) {
        let z = linear(params, row);
        // log(1 + e^z) - y·z, evaluated without overflow.
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - yi * z;
        let r = sigmoid(z) - yi;
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += r * v;
        }
    }
    loss /= n;
    for g in &mut grad {
        *g /= n;
    }
    for (g, w) in grad[1..].iter_mut().zip(&params[1..]) {
        *g += lambda * w;
    }
    loss += 0.5 * lambda * params[1..].iter().map(|w| w * w).sum::<f64>();
    (loss, grad)
}

fn descend(x: &[Vec<f64>], y: &[f64], rate: f64, iterations: usize, lambda: f64) -> Vec<f64> {
    let mut params = vec![0.0; x.first().map_or(0, Vec::len) + 1];
    for _ in 0..iterations {
        let (_, grad) = logistic_loss_grad(x, y, &params, lambda);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= rate * g;
        }
    }
    params
}

impl LogisticModel {
    pub fn fit(
        x: &[Vec<f64>],
        labels: &[String],
        rate: f64,
        iterations: usize,
        lambda: f64,
    ) -> LogisticModel {
        let classes: Vec<String> = labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let (means, scales) = standardizer(x);
        let z: Vec<Vec<f64>> = x.iter().map(|r| standardize(r, &means, &scales)).collect();
        let positives: &[String] = match classes.len() {
            0 | 1 => &[],
            2 => &classes[1..],
            _ => &classes,
        };
        let weights = positives
            .iter()
            .map(|c| {
                let y: Vec<f64> = labels
                    .iter()
                    .map(|l| if l == c { 1.0 } else { 0.0 })
                    .collect();
                descend(&z, &y, rate, iterations, lambda)
            })
            .collect();
        LogisticModel {
            classes,
            means,
            scales,
            weights,
        }
    }

    /// Positive-class probability of each one-vs-rest model.
    pub fn probabilities(&self, row: &[f64]) -> Vec<f64> {
        let z = standardize(row, &self.means, &self.scales);
        self.weights
            .iter()
            .map(|w| sigmoid(linear(w, &z)))
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> String {
        let probs = self.probabilities(row);
        match self.classes.len() {
            0 => String::new(),
            1 => self.classes[0].clone(),
            2 => self.classes[usize::from(probs[0] >= 0.5)].clone(),
            _ => {
                // Strict `>` keeps the earliest (lexicographically first) class on ties.
                let mut best = 0;
                for (i, p) in probs.iter().enumerate() {
                    if *p > probs[best] {
                        best = i;
                    }
                }
                self.classes[best].clone()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_loss_is_ln2() {
        let x = vec![vec![1.0], vec![-1.0]];
        let (loss, grad) = logistic_loss_grad(&x, &[1.0, 0.0], &[0.0, 0.0], 0.0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((grad[0]).abs() < 1e-12 && (grad[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn separable_reaches_full_accuracy() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<String> = (0..20)
            .map(|i| if i < 10 { "no" } else { "yes" }.to_string())
            .collect();
        let m = LogisticModel::fit(&x, &labels, 0.1, 500, 0.0);
        assert!(x.iter().zip(&labels).all(|(r, l)| &m.predict(r) == l));
    }

    #[test]
    fn multiclass_argmax() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i / 10) as f64 * 5.0, 0.0]).collect();
        let labels: Vec<String> = (0..30)
            .map(|i| ["a", "b", "c"][i / 10].to_string())
            .collect();
        let m = LogisticModel::fit(&x, &labels, 0.5, 2000, 0.0);
        assert_eq!(m.predict(&[0.0, 0.0]), "a");
        assert_eq!(m.predict(&[10.0, 0.0]), "c");
    }
}
