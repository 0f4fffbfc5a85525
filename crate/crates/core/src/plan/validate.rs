use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Plan;
use crate::mltools::naming::{component_names, indicator_name, term_name};
use crate::mltools::{monomials, EncodingScheme, Operation, RemovalCriterion};
use crate::tabular::{ColumnSpec, Dtype, Role};

/// A static problem found in a plan. `related_step` points at an earlier
/// step involved in the problem (e.g. the one that removed a column).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub related_step: Option<usize>,
    pub message: String,
}

struct Walk {
    schema: Vec<ColumnSpec>,
    removed: BTreeMap<String, usize>,
    /// One-hot sources: indicator names `col=<category>` are only known at
    /// run time, so any name with that prefix counts as numeric.
    expanded: BTreeMap<String, usize>,
}

impl Walk {
    fn position(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    fn indicator_of(&self, name: &str) -> bool {
        self.expanded
            .keys()
            .any(|src| name.starts_with(&indicator_name(src, "")))
    }

    fn remove(&mut self, name: &str, step: usize) {
        if let Some(i) = self.position(name) {
            self.schema.remove(i);
            self.removed.insert(name.to_string(), step);
        }
    }
}

/// Symbolic walk of the plan over `schema`: tracks added, removed and
/// retyped columns step by step and reports references that would fail.
/// Value-dependent effects (columns dropped by variance/correlation rules or
/// by feature selection) are not predicted.
pub fn validate_plan(plan: &Plan, schema: &[ColumnSpec]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut w = Walk {
        schema: schema.to_vec(),
        removed: BTreeMap::new(),
        expanded: BTreeMap::new(),
    };
    for (step, desc) in plan.steps.iter().enumerate() {
        let mut diag = |related_step: Option<usize>, message: String| {
            out.push(Diagnostic {
                step,
                related_step,
                message,
            });
        };
        let op = match Operation::parse(desc) {
            Ok(op) => op,
            Err(e) => {
                diag(None, e.to_string());
                continue;
            }
        };
        let mut present: Vec<String> = Vec::new();
        if desc.columns.is_empty() {
            present = w
                .schema
                .iter()
                .filter(|c| c.role == Role::Feature && op.check_column(&c.name, c.dtype).is_ok())
                .map(|c| c.name.clone())
                .collect();
        }
        for name in &desc.columns {
            if let Some(i) = w.position(name) {
                match op.check_column(name, w.schema[i].dtype) {
                    Ok(()) => present.push(name.clone()),
                    Err(e) => diag(None, e.to_string()),
                }
            } else if w.indicator_of(name) {
                if let Err(e) = op.check_column(name, Dtype::Numeric) {
                    diag(None, e.to_string());
                }
            } else if let Some(&at) = w.removed.get(name) {
                diag(
                    Some(at),
                    format!("column `{name}` was removed at step {at}"),
                );
            } else {
                diag(None, format!("unknown column `{name}`"));
            }
        }
        if let Operation::SelectFeatures { target, .. } = &op {
            let ok = match target {
                Some(t) => w.position(t).is_some(),
                None => w.schema.iter().any(|c| c.role == Role::Target),
            };
            if !ok {
                diag(None, "select_features needs a target column".into());
            }
        }
        match &op {
            Operation::EncodeCategorical(EncodingScheme::OneHot { .. }) => {
                for c in &present {
                    w.remove(c, step);
                    w.expanded.insert(c.clone(), step);
                }
            }
            Operation::EncodeCategorical(_) => {
                for spec in w.schema.iter_mut().filter(|s| present.contains(&s.name)) {
                    spec.dtype = Dtype::Numeric;
                }
            }
            Operation::DiscretizeFeatures(_) => {
                for spec in w.schema.iter_mut().filter(|s| present.contains(&s.name)) {
                    spec.dtype = Dtype::Categorical;
                }
            }
            Operation::RemoveColumns(RemovalCriterion::Explicit) => {
                for c in &present {
                    if w.schema
                        .iter()
                        .any(|s| &s.name == c && s.role == Role::Target)
                    {
                        diag(None, format!("refusing to drop target column `{c}`"));
                    } else {
                        w.remove(c, step);
                    }
                }
            }
            Operation::PolynomialFeatures {
                degree,
                interactions_only,
                max_columns,
            } => {
                let names: Vec<&str> = present.iter().map(String::as_str).collect();
                let monos = monomials(names.len(), *degree, *interactions_only);
                let count = w.schema.len() + monos.len();
                if count > *max_columns {
                    diag(
                        None,
                        format!("would produce {count} columns, above the cap of {max_columns}"),
                    );
                }
                for m in &monos {
                    w.schema
                        .push(ColumnSpec::new(term_name(&names, m), Dtype::Numeric));
                }
            }
            Operation::ReduceDimensions { n_components } => {
                if *n_components > present.len() {
                    diag(
                        None,
                        format!(
                            "{n_components} components requested from {} columns",
                            present.len()
                        ),
                    );
                }
                let at = present
                    .iter()
                    .filter_map(|c| w.position(c))
                    .min()
                    .unwrap_or(w.schema.len());
                for c in &present {
                    w.remove(c, step);
                }
                let at = at.min(w.schema.len());
                for (i, name) in component_names(*n_components).into_iter().enumerate() {
                    w.removed.remove(&name);
                    w.schema
                        .insert(at + i, ColumnSpec::new(name, Dtype::Numeric));
                }
            }
            _ => {}
        }
    }
    out
}
