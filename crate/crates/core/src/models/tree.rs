use serde::{Deserialize, Serialize};

use super::{majority, Targets};

/// Split gains at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: Option<String>,
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// CART tree: Gini impurity for labels, variance for values. Rows with
/// `x <= threshold` go left; thresholds are midpoints between consecutive
/// distinct values. Ties between candidate splits keep the lower feature
/// index, then the lower threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub classification: bool,
    pub root: Node,
}

fn impurity(y: &Targets, idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    match y {
        Targets::Labels(l) => {
            let mut counts = std::collections::BTreeMap::new();
            for &i in idx {
                *counts.entry(&l[i]).or_insert(0usize) += 1;
            }
            1.0 - counts
                .values()
                .map(|&c| (c as f64 / n).powi(2))
                .sum::<f64>()
        }
        Targets::Values(v) => {
            let mean = idx.iter().map(|&i| v[i]).sum::<f64>() / n;
            idx.iter().map(|&i| (v[i] - mean).powi(2)).sum::<f64>() / n
        }
    }
}

fn leaf(y: &Targets, idx: &[usize]) -> Node {
    match y {
        Targets::Labels(l) => Node::Leaf {
            label: Some(majority(idx.iter().map(|&i| &l[i]))),
            value: 0.0,
        },
        Targets::Values(v) => Node::Leaf {
            label: None,
            value: idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64,
        },
    }
}

fn grow(
    x: &[Vec<f64>],
    y: &Targets,
    idx: &[usize],
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
) -> Node {
    let parent = impurity(y, idx);
    if depth >= max_depth || parent <= MIN_GAIN || idx.len() < 2 * min_leaf {
        return leaf(y, idx);
    }
    let n = idx.len() as f64;
    let p = x.first().map_or(0, Vec::len);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..p {
        let mut values: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= t);
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let child = (l.len() as f64 * impurity(y, &l) + r.len() as f64 * impurity(y, &r)) / n;
            let gain = parent - child;
            if gain > MIN_GAIN && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, t));
            }
        }
    }
    match best {
        None => leaf(y, idx),
        Some((_, feature, threshold)) => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| x[i][feature] <= threshold);
            Node::Split {
                feature,
                threshold,
                left: Box::new(grow(x, y, &l, depth + 1, max_depth, min_leaf)),
                right: Box::new(grow(x, y, &r, depth + 1, max_depth, min_leaf)),
            }
        }
    }
}

impl TreeModel {
    pub fn fit(x: &[Vec<f64>], y: &Targets, max_depth: usize, min_leaf: usize) -> TreeModel {
        let idx: Vec<usize> = (0..x.len()).collect();
        TreeModel {
            classification: matches!(y, Targets::Labels(_)),
            root: grow(x, y, &idx, 0, max_depth, min_leaf),
        }
    }

    fn leaf_for(&self, row: &[f64]) -> &Node {
        let mut node = &self.root;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = node
        {
            node = if row[*feature] <= *threshold {
                left
            } else {
                right
            };
        }
        node
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Targets {
        let leaves: Vec<&Node> = x.iter().map(|r| self.leaf_for(r)).collect();
        if self.classification {
            Targets::Labels(
                leaves
                    .iter()
                    .map(|n| match n {
                        Node::Leaf { label, .. } => label.clone().unwrap_or_default(),
                        Node::Split { .. } => unreachable!(),
                    })
                    .collect(),
            )
        } else {
            Targets::Values(
                leaves
                    .iter()
                    .map(|n| match n {
                        Node::Leaf { value, .. } => *value,
                        Node::Split { .. } => unreachable!(),
                    })
                    .collect(),
            )
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }
}
