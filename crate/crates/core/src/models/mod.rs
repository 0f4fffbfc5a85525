//! Built-in model zoo and the predictive-fit grid.
//!
//! Six small, dependency-free model families cover linear and non-linear
//! fits for both tasks. Training is deterministic; `train_grid` pairs every
//! dataset with every model spec, scores each pair on a seeded validation
//! split and records failures instead of dropping them.

mod grid;
mod knn;
mod linear;
mod logistic;
mod tree;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{Cell, Dataset, Dtype, Role};

pub use grid::{select_top, train_grid, GridConfig, PredictiveFit, DEFAULT_VALIDATION_FRACTION};
pub use knn::KnnModel;
pub use linear::{solve_ridge, RidgeModel};
pub use logistic::{logistic_loss_grad, LogisticModel};
pub use tree::{Node, TreeModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("feature column `{column}` is {dtype}, expected numeric or boolean")]
    NonNumericFeature { column: String, dtype: Dtype },
    #[error("column `{0}` contains missing values")]
    MissingValuesPresent(String),
    #[error("normal equations are singular (collinear features with lambda = 0)")]
    SingularSystem,
    #[error("feature column `{0}` is absent from the scored dataset")]
    MissingFeatureColumn(String),
    #[error("target column `{0}` not found")]
    UnknownTarget(String),
    #[error("target `{column}` is {dtype}; regression needs a numeric target")]
    NonNumericTarget { column: String, dtype: Dtype },
    #[error("model family {family} cannot be used for {task}")]
    IncompatibleTask { family: String, task: Task },
    #[error("need at least 2 rows to train, got {0}")]
    InsufficientRows(usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("no successful fits")]
    NoSuccessfulFits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        })
    }
}

impl Task {
    /// Categorical or boolean targets are classification, numeric ones
    /// regression.
    pub fn infer(dtype: Dtype) -> Task {
        match dtype {
            Dtype::Numeric => Task::Regression,
            _ => Task::Classification,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelFamily {
    MeanBaseline,
    MajorityBaseline,
    LinearRegression {
        lambda: f64,
    },
    LogisticRegression {
        learning_rate: f64,
        iterations: usize,
        lambda: f64,
    },
    Knn {
        k: usize,
    },
    DecisionTree {
        max_depth: usize,
        min_leaf: usize,
    },
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::MeanBaseline => "mean_baseline",
            ModelFamily::MajorityBaseline => "majority_baseline",
            ModelFamily::LinearRegression { .. } => "linear_regression",
            ModelFamily::LogisticRegression { .. } => "logistic_regression",
            ModelFamily::Knn { .. } => "knn",
            ModelFamily::DecisionTree { .. } => "decision_tree",
        }
    }

    pub fn supports(&self, task: Task) -> bool {
        match self {
            ModelFamily::MeanBaseline | ModelFamily::LinearRegression { .. } => {
                task == Task::Regression
            }
            ModelFamily::MajorityBaseline | ModelFamily::LogisticRegression { .. } => {
                task == Task::Classification
            }
            ModelFamily::Knn { .. } | ModelFamily::DecisionTree { .. } => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    pub task: Task,
    #[serde(flatten)]
    pub family: ModelFamily,
}

impl ModelSpec {
    pub fn new(id: impl Into<String>, task: Task, family: ModelFamily) -> Self {
        ModelSpec {
            id: id.into(),
            task,
            family,
        }
    }

    // Negated comparisons so that NaN hyperparameters are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn check(&self) -> Result<(), ModelError> {
        if !self.family.supports(self.task) {
            return Err(ModelError::IncompatibleTask {
                family: self.family.name().into(),
                task: self.task,
            });
        }
        let bad = |m: &str| Err(ModelError::InvalidHyperparameter(m.to_string()));
        match self.family {
            ModelFamily::LinearRegression { lambda } if !(lambda >= 0.0) => {
                bad("lambda must be >= 0")
            }
            ModelFamily::LogisticRegression {
                learning_rate,
                lambda,
                ..
            } if !(learning_rate > 0.0) || !(lambda >= 0.0) => {
                bad("learning_rate must be > 0 and lambda >= 0")
            }
            ModelFamily::Knn { k: 0 } => bad("k must be >= 1"),
            ModelFamily::DecisionTree { min_leaf: 0, .. } => bad("min_leaf must be >= 1"),
            _ => Ok(()),
        }
    }
}

/// Four models per task: a baseline, a linear model, KNN and a shallow tree.
pub fn default_zoo(task: Task) -> Vec<ModelSpec> {
    let mut zoo = match task {
        Task::Classification => vec![
            ModelSpec::new("majority_baseline", task, ModelFamily::MajorityBaseline),
            ModelSpec::new(
                "logistic_regression",
                task,
                ModelFamily::LogisticRegression {
                    learning_rate: 0.1,
                    iterations: 500,
                    lambda: 0.01,
                },
            ),
        ],
        Task::Regression => vec![
            ModelSpec::new("mean_baseline", task, ModelFamily::MeanBaseline),
            ModelSpec::new(
                "ridge_regression",
                task,
                ModelFamily::LinearRegression { lambda: 1.0 },
            ),
        ],
    };
    zoo.push(ModelSpec::new("knn_5", task, ModelFamily::Knn { k: 5 }));
    zoo.push(ModelSpec::new(
        "decision_tree_d4",
        task,
        ModelFamily::DecisionTree {
            max_depth: 4,
            min_leaf: 2,
        },
    ));
    zoo
}

/// Training targets: class labels (rendered) or real values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    Labels(Vec<String>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Labels(v) => v.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learned {
    Constant { value: f64 },
    Majority { label: String },
    Ridge(RidgeModel),
    Logistic(LogisticModel),
    Knn(KnnModel),
    Tree(TreeModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub features: Vec<String>,
    pub target: String,
    /// Substituted for missing feature cells at prediction time.
    pub feature_means: Vec<f64>,
    pub learned: Learned,
}

impl TrainedModel {
    /// Canonical serialized form (pretty JSON, fixed field order).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub dataset_id: String,
    pub model_id: String,
    pub values: Targets,
}

/// Columns used as model inputs: every column except the target and
/// identifier/excluded roles.
pub fn feature_columns(ds: &Dataset, target: &str) -> Vec<String> {
    ds.columns()
        .iter()
        .filter(|c| c.name != target && c.role == Role::Feature)
        .map(|c| c.name.clone())
        .collect()
}

fn matrix(
    ds: &Dataset,
    features: &[String],
    fill: Option<&[f64]>,
) -> Result<Vec<Vec<f64>>, ModelError> {
    let mut idx = Vec::with_capacity(features.len());
    for f in features {
        let i = ds
            .column_index(f)
            .ok_or_else(|| ModelError::MissingFeatureColumn(f.clone()))?;
        let spec = &ds.columns()[i];
        if !matches!(spec.dtype, Dtype::Numeric | Dtype::Boolean) {
            return Err(ModelError::NonNumericFeature {
                column: f.clone(),
                dtype: spec.dtype,
            });
        }
        idx.push(i);
    }
    ds.rows()
        .iter()
        .map(|row| {
            idx.iter()
                .enumerate()
                .map(|(j, &i)| match (row[i].as_f64(), fill) {
                    (Some(v), _) => Ok(v),
                    (None, Some(means)) => Ok(means[j]),
                    (None, None) => Err(ModelError::MissingValuesPresent(features[j].clone())),
                })
                .collect()
        })
        .collect()
}

fn targets(ds: &Dataset, target: &str, task: Task) -> Result<Targets, ModelError> {
    let t = ds
        .column_index(target)
        .ok_or_else(|| ModelError::UnknownTarget(target.to_string()))?;
    let spec = &ds.columns()[t];
    if spec.missing_count > 0 {
        return Err(ModelError::MissingValuesPresent(target.to_string()));
    }
    match task {
        Task::Classification => Ok(Targets::Labels(ds.cells(t).map(Cell::render).collect())),
        Task::Regression => {
            if !matches!(spec.dtype, Dtype::Numeric | Dtype::Boolean) {
                return Err(ModelError::NonNumericTarget {
                    column: target.to_string(),
                    dtype: spec.dtype,
                });
            }
            Ok(Targets::Values(
                ds.cells(t).filter_map(Cell::as_f64).collect(),
            ))
        }
    }
}

/// Most frequent label; ties go to the lexicographically smallest.
pub(crate) fn majority<'a>(labels: impl IntoIterator<Item = &'a String>) -> String {
    let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut best: Option<(&String, usize)> = None;
    for (l, n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((l, n));
        }
    }
    best.map(|(l, _)| l.clone()).unwrap_or_default()
}

/// Column means and population SDs (SD 0 replaced by 1).
pub(crate) fn standardizer(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let p = x.first().map_or(0, Vec::len);
    let n = x.len().max(1) as f64;
    let means: Vec<f64> = (0..p)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let scales = (0..p)
        .map(|j| {
            let var = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    (means, scales)
}

pub(crate) fn standardize(row: &[f64], means: &[f64], scales: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(means.iter().zip(scales))
        .map(|(v, (m, s))| (v - m) / s)
        .collect()
}

/// Trains `spec` on every feature column of `ds` (see [`feature_columns`]).
/// Training is deterministic; `seed` is accepted for interface stability and
/// currently unused by every family.
pub fn train(
    ds: &Dataset,
    target: &str,
    spec: &ModelSpec,
    _seed: u64,
) -> Result<TrainedModel, ModelError> {
    spec.check()?;
    if ds.n_rows() < 2 {
        return Err(ModelError::InsufficientRows(ds.n_rows()));
    }
    let features = feature_columns(ds, target);
    let y = targets(ds, target, spec.task)?;
    let x = matrix(ds, &features, None)?;
    let feature_means = (0..features.len())
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / x.len() as f64)
        .collect();
    let learned = match (&spec.family, &y) {
        (ModelFamily::MeanBaseline, Targets::Values(v)) => Learned::Constant {
            value: v.iter().sum::<f64>() / v.len() as f64,
        },
        (ModelFamily::MajorityBaseline, Targets::Labels(l)) => {
            Learned::Majority { label: majority(l) }
        }
        (ModelFamily::LinearRegression { lambda }, Targets::Values(v)) => {
            Learned::Ridge(RidgeModel::fit(&x, v, *lambda)?)
        }
        (
            ModelFamily::LogisticRegression {
                learning_rate,
                iterations,
                lambda,
            },
            Targets::Labels(l),
        ) => Learned::Logistic(LogisticModel::fit(
            &x,
            l,
            *learning_rate,
            *iterations,
            *lambda,
        )),
        (ModelFamily::Knn { k }, _) => Learned::Knn(KnnModel::fit(&x, &y, *k)),
        (
            ModelFamily::DecisionTree {
                max_depth,
                min_leaf,
            },
            _,
        ) => Learned::Tree(TreeModel::fit(&x, &y, *max_depth, *min_leaf)),
        _ => unreachable!("family/task compatibility checked above"),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        features,
        target: target.to_string(),
        feature_means,
        learned,
    })
}

/// Predicts every row of `ds`. Extra columns are ignored; missing feature
/// cells take the training mean of that feature.
pub fn predict(model: &TrainedModel, ds: &Dataset) -> Result<Predictions, ModelError> {
    let x = matrix(ds, &model.features, Some(&model.feature_means))?;
    let values = match &model.learned {
        Learned::Constant { value } => Targets::Values(vec![*value; x.len()]),
        Learned::Majority { label } => Targets::Labels(vec![label.clone(); x.len()]),
        Learned::Ridge(m) => Targets::Values(x.iter().map(|r| m.predict(r)).collect()),
        Learned::Logistic(m) => Targets::Labels(x.iter().map(|r| m.predict(r)).collect()),
        Learned::Knn(m) => m.predict(&x),
        Learned::Tree(m) => m.predict(&x),
    };
    Ok(Predictions {
        dataset_id: ds.id().to_string(),
        model_id: model.spec.id.clone(),
        values,
    })
}
