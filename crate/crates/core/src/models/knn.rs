use serde::{Deserialize, Serialize};

use super::{majority, standardize, standardizer, Targets};

/// k-nearest neighbours over standardized features with squared Euclidean
/// distance. Distance ties go to the lower training row index; vote ties to
/// the lexicographically smallest label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Targets,
}

impl KnnModel {
    pub fn fit(x: &[Vec<f64>], y: &Targets, k: usize) -> KnnModel {
        let (means, scales) = standardizer(x);
        let rows = x.iter().map(|r| standardize(r, &means, &scales)).collect();
        KnnModel {
            k,
            means,
            scales,
            rows,
            targets: y.clone(),
        }
    }

    fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let z = standardize(row, &self.means, &self.scales);
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Targets {
        match &self.targets {
            Targets::Labels(l) => Targets::Labels(
                x.iter()
                    .map(|r| majority(self.neighbours(r).iter().map(|&i| &l[i])))
                    .collect(),
            ),
            Targets::Values(v) => Targets::Values(
                x.iter()
                    .map(|r| {
                        let nb = self.neighbours(r);
                        nb.iter().map(|&i| v[i]).sum::<f64>() / nb.len() as f64
                    })
                    .collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_neighbour_memorizes() {
        let x = vec![vec![0.0], vec![1.0], vec![5.0]];
        let y = Targets::Values(vec![1.0, 2.0, 3.0]);
        let m = KnnModel::fit(&x, &y, 1);
        assert_eq!(m.predict(&x), y);
    }

    #[test]
    fn vote_tie_goes_to_smallest_label() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = Targets::Labels(vec!["b".into(), "a".into()]);
        let m = KnnModel::fit(&x, &y, 2);
        assert_eq!(m.predict(&[vec![0.0]]), Targets::Labels(vec!["a".into()]));
    }
}
