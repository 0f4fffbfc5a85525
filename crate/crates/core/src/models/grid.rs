use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{predict, targets, train, ModelError, ModelSpec, Targets, Task};
use crate::metrics::{self, Scores};
use crate::seeding::sub_seed;
use crate::stats;
use crate::tabular::{split_train_test, Dataset};

pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub task: Task,
    pub validation_fraction: f64,
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    pub jobs: usize,
}

impl GridConfig {
    pub fn new(task: Task, seed: u64) -> Self {
        GridConfig {
            task,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            seed,
            jobs: 1,
        }
    }
}

/// One (dataset, model) cell of the grid. Exactly one of `nps` and `error`
/// is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveFit {
    pub dataset_id: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictiveFit {
    pub fn succeeded(&self) -> bool {
        self.nps.is_some()
    }
}

fn fit_one(
    ds: &Dataset,
    spec: &ModelSpec,
    target: &str,
    cfg: &GridConfig,
) -> Result<Scores, String> {
    if spec.task != cfg.task {
        return Err(ModelError::IncompatibleTask {
            family: spec.family.name().into(),
            task: cfg.task,
        }
        .to_string());
    }
    // Every model on a dataset shares its split.
    let split_seed = sub_seed(cfg.seed, ds.id());
    let (tr, va) =
        split_train_test(ds, cfg.validation_fraction, split_seed).map_err(|e| e.to_string())?;
    let model = train(&tr, target, spec, split_seed).map_err(|e| e.to_string())?;
    let pred = predict(&model, &va).map_err(|e| e.to_string())?;
    let truth = targets(&va, target, spec.task).map_err(|e| e.to_string())?;
    let scores = match (truth, pred.values) {
        (Targets::Labels(t), Targets::Labels(p)) => {
            metrics::classification_scores(&t, &p).map(Scores::Classification)
        }
        (Targets::Values(t), Targets::Values(p)) => {
            metrics::regression_scores(&t, &p).map(Scores::Regression)
        }
        _ => unreachable!("prediction kind follows the task"),
    };
    scores.map_err(|e| e.to_string())
}

/// Fits every model on every dataset. Failures become fits with `error`
/// set; the result is sorted by (dataset id, model id) and is identical for
/// any `jobs`.
pub fn train_grid(
    datasets: &[Dataset],
    specs: &[ModelSpec],
    target: &str,
    cfg: &GridConfig,
) -> Vec<PredictiveFit> {
    let cells: Vec<(&Dataset, &ModelSpec)> = datasets
        .iter()
        .flat_map(|d| specs.iter().map(move |s| (d, s)))
        .collect();
    let run = |&(ds, spec): &(&Dataset, &ModelSpec)| {
        let outcome = fit_one(ds, spec, target, cfg);
        let (scores, nps, error) = match outcome {
            Ok(s) => (Some(s), Some(metrics::nps(&s)), None),
            Err(e) => (None, None, Some(e)),
        };
        PredictiveFit {
            dataset_id: ds.id().to_string(),
            model_id: spec.id.clone(),
            scores,
            nps,
            error,
        }
    };
    let mut fits: Vec<PredictiveFit> = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| cells.par_iter().map(run).collect()),
        Err(_) => cells.iter().map(run).collect(),
    };
    fits.sort_by(|a, b| (&a.dataset_id, &a.model_id).cmp(&(&b.dataset_id, &b.model_id)));
    fits
}

/// Population SD of each model's NPS across the datasets it fitted.
pub(crate) fn per_model_sd(fits: &[PredictiveFit]) -> BTreeMap<String, f64> {
    let mut by_model: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for f in fits {
        if let Some(v) = f.nps {
            by_model.entry(f.model_id.clone()).or_default().push(v);
        }
    }
    by_model
        .into_iter()
        .map(|(m, v)| (m, stats::population_sd(&v).unwrap_or(0.0)))
        .collect()
}

/// The `n` best successful fits by NPS. Ties prefer the model with the lower
/// per-model SD across datasets, then lexicographic (dataset id, model id).
pub fn select_top(fits: &[PredictiveFit], n: usize) -> Result<Vec<PredictiveFit>, ModelError> {
    let sd = per_model_sd(fits);
    let mut ok: Vec<&PredictiveFit> = fits.iter().filter(|f| f.succeeded()).collect();
    if ok.is_empty() {
        return Err(ModelError::NoSuccessfulFits);
    }
    ok.sort_by(|a, b| {
        let (na, nb) = (
            a.nps.unwrap_or(f64::NEG_INFINITY),
            b.nps.unwrap_or(f64::NEG_INFINITY),
        );
        nb.total_cmp(&na)
            .then(sd[&a.model_id].total_cmp(&sd[&b.model_id]))
            .then((&a.dataset_id, &a.model_id).cmp(&(&b.dataset_id, &b.model_id)))
    });
    Ok(ok.into_iter().take(n).cloned().collect())
}
