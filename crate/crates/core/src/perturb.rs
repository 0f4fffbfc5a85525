//! Perturbation engine: alternative cleaning stacks applied to the raw data.
//!
//! Each judgment call lists interchangeable operations for one decision
//! point; alternative 0 is the reference choice, so the all-zero cell of the
//! grid reproduces the reference cleaning. Cells are enumerated in odometer
//! order (last decision point varies fastest).

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datacheck::{self, CheckConfig, CheckResult};
use crate::mltools::{MlError, OpDescriptor};
use crate::models::{select_top, PredictiveFit};
use crate::plan::{execute_plan, Plan};
use crate::seeding::sub_seed;
use crate::stats;
use crate::tabular::Dataset;

pub const DEFAULT_K: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbError {
    #[error("no judgment calls with alternatives")]
    NoAlternatives,
    #[error("decision point `{0}` appears twice")]
    DuplicateDecisionPoint(String),
    #[error("alternatives of `{0}` target different columns")]
    InconsistentColumns(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("spec {spec_id} does not match the judgment calls")]
    SpecMismatch { spec_id: String },
    #[error("{spec_id}: step {step} failed: {error}")]
    Op {
        spec_id: String,
        step: usize,
        error: MlError,
    },
    #[error("no fits to aggregate")]
    EmptyFits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentCall {
    pub decision_point: String,
    pub alternatives: Vec<OpDescriptor>,
}

impl JudgmentCall {
    pub fn fixed(decision_point: impl Into<String>, op: OpDescriptor) -> Self {
        JudgmentCall {
            decision_point: decision_point.into(),
            alternatives: vec![op],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub id: String,
    /// Decision point → chosen alternative index.
    pub choices: BTreeMap<String, usize>,
    pub seed: u64,
}

fn check_calls(calls: &[JudgmentCall]) -> Result<(), PerturbError> {
    if calls.is_empty() || calls.iter().any(|c| c.alternatives.is_empty()) {
        return Err(PerturbError::NoAlternatives);
    }
    let mut seen = BTreeSet::new();
    for c in calls {
        if !seen.insert(c.decision_point.as_str()) {
            return Err(PerturbError::DuplicateDecisionPoint(
                c.decision_point.clone(),
            ));
        }
        let first = &c.alternatives[0].columns;
        if c.alternatives.iter().any(|a| &a.columns != first) {
            return Err(PerturbError::InconsistentColumns(c.decision_point.clone()));
        }
    }
    Ok(())
}

pub fn grid_size(calls: &[JudgmentCall]) -> usize {
    calls
        .iter()
        .fold(1usize, |acc, c| acc.saturating_mul(c.alternatives.len()))
}

/// Alternative indices of grid cell `cell` (odometer order).
fn decode(calls: &[JudgmentCall], mut cell: usize) -> Vec<usize> {
    let mut digits = vec![0; calls.len()];
    for (i, c) in calls.iter().enumerate().rev() {
        digits[i] = cell % c.alternatives.len();
        cell /= c.alternatives.len();
    }
    digits
}

/// Up to `k` specs. If the grid has at most `k` cells all are returned in
/// grid order; otherwise the reference cell plus `k - 1` other cells drawn
/// without replacement with `seed`, kept in grid order.
pub fn enumerate_specs(
    calls: &[JudgmentCall],
    k: usize,
    seed: u64,
) -> Result<Vec<PerturbationSpec>, PerturbError> {
    check_calls(calls)?;
    if k == 0 {
        return Err(PerturbError::InvalidK);
    }
    let size = grid_size(calls);
    let cells: Vec<usize> = if size <= k {
        (0..size).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, size - 1, k - 1)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        picked.sort_unstable();
        std::iter::once(0).chain(picked).collect()
    };
    let width = (cells.len().saturating_sub(1)).to_string().len().max(3);
    Ok(cells
        .into_iter()
        .enumerate()
        .map(|(n, cell)| {
            let id = format!("p_{n:0width$}");
            let choices = calls
                .iter()
                .map(|c| c.decision_point.clone())
                .zip(decode(calls, cell))
                .collect();
            PerturbationSpec {
                seed: sub_seed(seed, &id),
                id,
                choices,
            }
        })
        .collect())
}

/// The cleaning plan a spec stands for: the chosen alternative of every
/// decision point, in declared order.
pub fn spec_plan(spec: &PerturbationSpec, calls: &[JudgmentCall]) -> Result<Plan, PerturbError> {
    let mismatch = || PerturbError::SpecMismatch {
        spec_id: spec.id.clone(),
    };
    if spec.choices.len() != calls.len() {
        return Err(mismatch());
    }
    let steps = calls
        .iter()
        .map(|c| {
            let i = *spec.choices.get(&c.decision_point).ok_or_else(mismatch)?;
            c.alternatives.get(i).cloned().ok_or_else(mismatch)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plan::new(format!("perturbation {}", spec.id), steps))
}

/// Applies the spec's plan to the raw data. The result carries the spec id.
pub fn materialize(
    raw: &Dataset,
    spec: &PerturbationSpec,
    calls: &[JudgmentCall],
) -> Result<Dataset, PerturbError> {
    let plan = spec_plan(spec, calls)?;
    let done = execute_plan(&plan, raw).map_err(|f| PerturbError::Op {
        spec_id: spec.id.clone(),
        step: f.step,
        error: f.error,
    })?;
    Ok(done.dataset.with_id(spec.id.clone()))
}

/// [`materialize`] for every spec on `jobs` worker threads; output order
/// follows `specs`.
pub fn materialize_all(
    raw: &Dataset,
    specs: &[PerturbationSpec],
    calls: &[JudgmentCall],
    jobs: usize,
) -> Vec<Result<Dataset, PerturbError>> {
    let run = |s: &PerturbationSpec| materialize(raw, s, calls);
    match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| specs.par_iter().map(run).collect()),
        Err(_) => specs.iter().map(run).collect(),
    }
}

/// Check-suite results per dataset id. Datasets that fail are to be
/// excluded from the fit grid.
pub fn validate_all(
    perturbed: &[Dataset],
    raw: &Dataset,
    cfg: &CheckConfig,
) -> BTreeMap<String, Vec<CheckResult>> {
    perturbed
        .iter()
        .map(|d| (d.id().to_string(), datacheck::run_suite(d, raw, cfg)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStability {
    pub model_id: String,
    pub n_datasets: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Sorted by model id.
    pub models: Vec<ModelStability>,
    pub best_model: String,
    /// Highest-NPS fit of the best model.
    pub best_fit: PredictiveFit,
}

/// NPS spread of each model across datasets. The best model has the highest
/// mean, then the lower SD, then the smaller model id. Failed fits are
/// ignored.
pub fn stability_report(fits: &[PredictiveFit]) -> Result<StabilityReport, PerturbError> {
    let mut by_model: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for f in fits {
        if let Some(v) = f.nps {
            by_model.entry(&f.model_id).or_default().push(v);
        }
    }
    let models: Vec<ModelStability> = by_model
        .into_iter()
        .map(|(m, v)| {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ModelStability {
                model_id: m.to_string(),
                n_datasets: v.len(),
                min,
                max,
                mean: stats::mean(&v).unwrap_or(0.0),
                sd: stats::population_sd(&v).unwrap_or(0.0),
                spread: max - min,
            }
        })
        .collect();
    let best = models
        .iter()
        .min_by(|a, b| {
            b.mean
                .total_cmp(&a.mean)
                .then(a.sd.total_cmp(&b.sd))
                .then(a.model_id.cmp(&b.model_id))
        })
        .ok_or(PerturbError::EmptyFits)?;
    let own: Vec<PredictiveFit> = fits
        .iter()
        .filter(|f| f.model_id == best.model_id)
        .cloned()
        .collect();
    let best_fit = select_top(&own, 1)
        .map_err(|_| PerturbError::EmptyFits)?
        .remove(0);
    Ok(StabilityReport {
        best_model: best.model_id.clone(),
        best_fit,
        models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(name: &str, n: usize) -> JudgmentCall {
        JudgmentCall {
            decision_point: name.into(),
            alternatives: (0..n)
                .map(|i| OpDescriptor::new("fill_missing", &["a"]).param("k", i))
                .collect(),
        }
    }

    #[test]
    fn full_grid_in_odometer_order() {
        let calls = [call("x", 2), call("y", 3)];
        let specs = enumerate_specs(&calls, 50, 1).unwrap();
        assert_eq!(specs.len(), 6);
        assert_eq!(specs[0].id, "p_000");
        assert_eq!(specs[1].choices["y"], 1);
        assert_eq!(specs[3].choices["x"], 1);
        let distinct: BTreeSet<_> = specs.iter().map(|s| s.choices.clone()).collect();
        assert_eq!(distinct.len(), 6);
    }

    #[test]
    fn sampled_subset_keeps_reference() {
        let calls = [call("x", 2), call("y", 3)];
        let a = enumerate_specs(&calls, 4, 9).unwrap();
        assert_eq!(a, enumerate_specs(&calls, 4, 9).unwrap());
        assert_eq!(a.len(), 4);
        assert!(a[0].choices.values().all(|&v| v == 0));
        let distinct: BTreeSet<_> = a.iter().map(|s| s.choices.clone()).collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn errors() {
        assert_eq!(
            enumerate_specs(&[], 3, 0),
            Err(PerturbError::NoAlternatives)
        );
        assert_eq!(
            enumerate_specs(&[call("x", 2)], 0, 0),
            Err(PerturbError::InvalidK)
        );
        assert!(matches!(
            enumerate_specs(&[call("x", 1), call("x", 1)], 1, 0),
            Err(PerturbError::DuplicateDecisionPoint(_))
        ));
        let mut bad = call("x", 2);
        bad.alternatives[1].columns = vec!["b".into()];
        assert!(matches!(
            enumerate_specs(&[bad], 1, 0),
            Err(PerturbError::InconsistentColumns(_))
        ));
    }

    fn fit(d: &str, m: &str, nps: f64) -> PredictiveFit {
        PredictiveFit {
            dataset_id: d.into(),
            model_id: m.into(),
            scores: None,
            nps: Some(nps),
            error: None,
        }
    }

    #[test]
    fn stability_aggregates() {
        let r = stability_report(&[fit("a", "m", 0.8), fit("b", "m", 0.9)]).unwrap();
        let m = &r.models[0];
        assert!((m.mean - 0.85).abs() < 1e-12 && (m.sd - 0.05).abs() < 1e-12);
        assert!((m.spread - 0.1).abs() < 1e-12);
        assert_eq!(r.best_fit.dataset_id, "b");
        assert_eq!(stability_report(&[]), Err(PerturbError::EmptyFits));
    }

    #[test]
    fn equal_means_prefer_lower_sd() {
        let fits = [
            fit("a", "wide", 0.7),
            fit("b", "wide", 0.9),
            fit("a", "tight", 0.79),
            fit("b", "tight", 0.81),
        ];
        assert_eq!(stability_report(&fits).unwrap().best_model, "tight");
    }
}
