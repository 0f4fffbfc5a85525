//! Scores and the run-level evaluation stack.
//!
//! Per-split scores (classification or regression) collapse to a single
//! normalized performance score (NPS). Repeated runs aggregate to a mean and
//! population SD (ANPS), the share of runs that produced a usable submission
//! is the validity score (VS), and the comprehensive score (CS) weighs the two
//! equally.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("length mismatch: {truth} truths vs {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("no values to score")]
    Empty,
    #[error("tally has {successes} successes out of {attempts} attempts")]
    InvalidTally { successes: u64, attempts: u64 },
    #[error("malformed metrics file: {0}")]
    Malformed(String),
}

/// Macro-averaged classification scores, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionScores {
    pub rmse: f64,
    pub mae: f64,
    pub r2: f64,
    /// Set when the truth was constant and predictions were not, so `r2`
    /// holds [`R2_SENTINEL`] rather than a finite ratio.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub r2_sentinel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Scores {
    Classification(ClassificationScores),
    Regression(RegressionScores),
}

/// Stand-in for R² = −∞ on constant-truth splits with imperfect predictions.
pub const R2_SENTINEL: f64 = -1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub anps: f64,
    pub sd: f64,
    pub n_runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionTally {
    pub successes: u64,
    pub attempts: u64,
}

impl SubmissionTally {
    pub fn new(successes: u64, attempts: u64) -> Result<Self, MetricsError> {
        if attempts == 0 || successes > attempts {
            return Err(MetricsError::InvalidTally {
                successes,
                attempts,
            });
        }
        Ok(SubmissionTally {
            successes,
            attempts,
        })
    }
}

fn check_lengths(truth: usize, pred: usize) -> Result<(), MetricsError> {
    if truth != pred {
        return Err(MetricsError::LengthMismatch { truth, pred });
    }
    if truth == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Macro-averaged scores over the union of classes seen in truth and
/// predictions. A class with an empty denominator scores 0 for that metric.
pub fn classification_scores<L: Ord>(
    truth: &[L],
    pred: &[L],
) -> Result<ClassificationScores, MetricsError> {
    check_lengths(truth.len(), pred.len())?;
    let classes: BTreeSet<&L> = truth.iter().chain(pred).collect();
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for class in &classes {
        let tp = truth
            .iter()
            .zip(pred)
            .filter(|(t, p)| t == class && p == class)
            .count();
        let predicted = pred.iter().filter(|p| p == class).count();
        let actual = truth.iter().filter(|t| t == class).count();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        precision += p;
        recall += r;
        f1 += if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
    }
    let k = classes.len() as f64;
    Ok(ClassificationScores {
        accuracy: ratio(correct, truth.len()),
        precision: precision / k,
        recall: recall / k,
        f1: f1 / k,
    })
}

pub fn regression_scores(truth: &[f64], pred: &[f64]) -> Result<RegressionScores, MetricsError> {
    check_lengths(truth.len(), pred.len())?;
    let n = truth.len() as f64;
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum();
    let mae = truth
        .iter()
        .zip(pred)
        .map(|(t, p)| (t - p).abs())
        .sum::<f64>()
        / n;
    let mean = stats::mean(truth).unwrap_or(0.0);
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    let (r2, r2_sentinel) = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot, false)
    } else if ss_res == 0.0 {
        (0.0, false)
    } else {
        (R2_SENTINEL, true)
    };
    Ok(RegressionScores {
        rmse: (ss_res / n).sqrt(),
        mae,
        r2,
        r2_sentinel,
    })
}

pub fn nps_classification(s: &ClassificationScores) -> f64 {
    (s.accuracy + s.f1 + s.precision + s.recall) / 4.0
}

pub fn nps_regression(s: &RegressionScores) -> f64 {
    (1.0 / (1.0 + s.rmse) + 1.0 / (1.0 + s.mae) + s.r2) / 3.0
}

pub fn nps(scores: &Scores) -> f64 {
    match scores {
        Scores::Classification(s) => nps_classification(s),
        Scores::Regression(s) => nps_regression(s),
    }
}

/// Mean and population (1/N) SD of per-run scores.
pub fn anps(values: &[f64]) -> Result<RunAggregate, MetricsError> {
    let anps = stats::mean(values).ok_or(MetricsError::Empty)?;
    let sd = stats::population_sd(values).unwrap_or(0.0);
    Ok(RunAggregate {
        anps,
        sd,
        n_runs: values.len(),
    })
}

pub fn vs(tally: &SubmissionTally) -> f64 {
    tally.successes as f64 / tally.attempts as f64
}

pub fn cs(vs: f64, anps: f64) -> f64 {
    0.5 * vs + 0.5 * anps
}

/// Input of the standalone metrics computation: per-run NPS of the valid
/// runs plus the submission tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsInput {
    pub nps: Vec<f64>,
    pub tally: SubmissionTally,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub vs: f64,
    pub anps: f64,
    pub sd: f64,
    pub cs: f64,
    pub n_runs: usize,
}

impl MetricsInput {
    pub fn parse(text: &str) -> Result<MetricsInput, MetricsError> {
        serde_json::from_str(text).map_err(|e| MetricsError::Malformed(e.to_string()))
    }

    pub fn summarize(&self) -> Result<MetricsSummary, MetricsError> {
        let tally = SubmissionTally::new(self.tally.successes, self.tally.attempts)?;
        if self.nps.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::Malformed("non-finite NPS value".into()));
        }
        let agg = anps(&self.nps)?;
        let vs = vs(&tally);
        Ok(MetricsSummary {
            vs,
            anps: agg.anps,
            sd: agg.sd,
            cs: cs(vs, agg.anps),
            n_runs: agg.n_runs,
        })
    }
}
