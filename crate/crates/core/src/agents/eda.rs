//! Exploratory summary of the cleaned data. Every answer cites the
//! statistics it rests on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::models::Task;
use crate::stats;
use crate::tabular::{
    describe_column, summarize, Cell, ColumnSummary, Dataset, Dtype, Role, TextSummary,
};

/// A statistic backing an answer: recomputable from the named dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub dataset: String,
    pub column: String,
    pub statistic: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaQuestion {
    pub question: String,
    pub answer: String,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaReport {
    pub questions: Vec<EdaQuestion>,
    pub columns: Vec<ColumnSummary>,
    pub descriptions: Vec<TextSummary>,
}

/// Number of features listed in the association answer.
const TOP_ASSOCIATIONS: usize = 3;

fn evidence(ds: &Dataset, column: &str, statistic: &str, value: f64) -> Evidence {
    Evidence {
        dataset: ds.id().to_string(),
        column: column.into(),
        statistic: statistic.into(),
        value,
    }
}

fn missingness(raw: &Dataset) -> EdaQuestion {
    let n = raw.n_rows().max(1) as f64;
    let ev: Vec<Evidence> = raw
        .columns()
        .iter()
        .filter(|c| c.missing_count > 0)
        .map(|c| evidence(raw, &c.name, "missing_fraction", c.missing_count as f64 / n))
        .collect();
    let answer = if ev.is_empty() {
        "No column had missing values.".to_string()
    } else {
        let parts: Vec<String> = ev
            .iter()
            .map(|e| format!("{} ({:.1}%)", e.column, 100.0 * e.value))
            .collect();
        format!("Missing values before cleaning: {}.", parts.join(", "))
    };
    EdaQuestion {
        question: "Which columns had missing values before cleaning?".into(),
        answer,
        evidence: ev,
    }
}

fn target_distribution(clean: &Dataset, target: &str, task: Task) -> Option<EdaQuestion> {
    let t = clean.column_index(target)?;
    let question = format!("How is the target `{target}` distributed?");
    match task {
        Task::Classification => {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for c in clean.cells(t).filter(|c| !c.is_missing()) {
                *counts.entry(c.render()).or_insert(0) += 1;
            }
            let total = counts.values().sum::<usize>().max(1) as f64;
            let ev: Vec<Evidence> = counts
                .iter()
                .map(|(k, &v)| evidence(clean, target, &format!("share[{k}]"), v as f64 / total))
                .collect();
            let parts: Vec<String> = counts
                .iter()
                .map(|(k, &v)| format!("{k}: {v} ({:.1}%)", 100.0 * v as f64 / total))
                .collect();
            Some(EdaQuestion {
                question,
                answer: format!("Class counts: {}.", parts.join(", ")),
                evidence: ev,
            })
        }
        Task::Regression => {
            let v = clean.observed_numeric(t);
            let mean = stats::mean(&v)?;
            let sd = stats::population_sd(&v)?;
            Some(EdaQuestion {
                question,
                answer: format!("Mean {mean:.4}, standard deviation {sd:.4}."),
                evidence: vec![
                    evidence(clean, target, "mean", mean),
                    evidence(clean, target, "sd", sd),
                ],
            })
        }
    }
}

fn associations(clean: &Dataset, target: &str) -> Option<EdaQuestion> {
    let t = clean.column_index(target)?;
    if !matches!(clean.columns()[t].dtype, Dtype::Numeric | Dtype::Boolean) {
        return None;
    }
    let y = clean.numeric_column(t);
    let mut scored: Vec<(String, f64)> = clean
        .columns()
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            *i != t && c.role == Role::Feature && matches!(c.dtype, Dtype::Numeric | Dtype::Boolean)
        })
        .filter_map(|(i, c)| {
            let x = clean.numeric_column(i);
            let (a, b): (Vec<f64>, Vec<f64>) = x
                .iter()
                .zip(&y)
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            stats::pearson(&a, &b).map(|r| (c.name.clone(), r))
        })
        .collect();
    // Stable sort keeps column order among equal magnitudes.
    scored.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    scored.truncate(TOP_ASSOCIATIONS);
    if scored.is_empty() {
        return None;
    }
    let parts: Vec<String> = scored
        .iter()
        .map(|(c, r)| format!("{c} (r = {r:.3})"))
        .collect();
    Some(EdaQuestion {
        question: format!("Which features are most linearly associated with `{target}`?"),
        answer: format!("Strongest Pearson correlations: {}.", parts.join(", ")),
        evidence: scored
            .iter()
            .map(|(c, r)| evidence(clean, c, &format!("pearson[{target}]"), *r))
            .collect(),
    })
}

pub(crate) fn explore(raw: &Dataset, clean: &Dataset, target: &str, task: Task) -> EdaReport {
    let mut questions = vec![missingness(raw)];
    questions.extend(target_distribution(clean, target, task));
    questions.extend(associations(clean, target));
    let descriptions = clean
        .columns()
        .iter()
        .filter(|c| c.dtype == Dtype::Numeric && c.role == Role::Feature)
        .filter_map(|c| describe_column(clean, &c.name, None).ok())
        .collect();
    EdaReport {
        questions,
        columns: summarize(clean),
        descriptions,
    }
}

/// Whether every non-missing cell of a column is distinct.
pub(crate) fn all_unique(ds: &Dataset, col: usize) -> bool {
    let mut seen = std::collections::HashSet::new();
    ds.cells(col)
        .all(|c: &Cell| !c.is_missing() && seen.insert(c.render()))
}
