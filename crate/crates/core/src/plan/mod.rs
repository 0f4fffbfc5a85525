//! Structured cleaning plans: a versioned list of library operations that
//! can be parsed, statically validated against a schema, executed, and
//! repaired by a planner within a bounded number of rounds.

mod exec;
mod registry;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mltools::{OpDescriptor, Operation};

pub use exec::{
    execute_plan, repair_loop, Executed, ExecutionTrace, PlanRepairer, RepairAttempt,
    RepairContext, RepairFailure, RepairOutcome, StepFailed, StepOutcome, StepRecord,
};
pub use registry::{StageId, ToolInfo, ToolRegistry};
pub use validate::{validate_plan, Diagnostic};

pub const PLAN_VERSION: &str = "1";
/// Default bound on repair rounds.
pub const DEFAULT_N_MAX: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("plan syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", match .step { Some(s) => format!("plan step {s}: {message}"), None => format!("plan: {message}") })]
    Schema {
        step: Option<usize>,
        message: String,
    },
}

/// A cleaning plan. Step `i` is `steps[i]`; an empty list is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub version: String,
    pub task_label: String,
    pub steps: Vec<OpDescriptor>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    version: String,
    #[serde(default = "default_label")]
    task_label: String,
    steps: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    op: String,
    #[serde(default)]
    columns: Vec<String>,
    #[serde(default)]
    params: std::collections::BTreeMap<String, crate::tabular::Param>,
}

fn default_label() -> String {
    "cleaning".to_string()
}

impl Plan {
    pub fn new(task_label: impl Into<String>, steps: Vec<OpDescriptor>) -> Self {
        Plan {
            version: PLAN_VERSION.to_string(),
            task_label: task_label.into(),
            steps,
        }
    }

    pub fn identity() -> Self {
        Plan::new(default_label(), Vec::new())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

fn schema_err(step: Option<usize>, message: impl Into<String>) -> PlanError {
    PlanError::Schema {
        step,
        message: message.into(),
    }
}

/// Parses the JSON wire format. Every step is checked against the operation
/// library, including parameter names and types.
pub fn parse_plan(text: &str) -> Result<Plan, PlanError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| PlanError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    parse_plan_value(value)
}

pub fn parse_plan_value(value: serde_json::Value) -> Result<Plan, PlanError> {
    let raw: RawPlan =
        serde_json::from_value(value).map_err(|e| schema_err(None, e.to_string()))?;
    if raw.version != PLAN_VERSION {
        return Err(schema_err(
            None,
            format!("unsupported version `{}`", raw.version),
        ));
    }
    let mut steps = Vec::with_capacity(raw.steps.len());
    for (i, v) in raw.steps.into_iter().enumerate() {
        let s: RawStep =
            serde_json::from_value(v).map_err(|e| schema_err(Some(i), e.to_string()))?;
        let desc = OpDescriptor {
            op_name: s.op,
            columns: s.columns,
            params: s.params,
        };
        Operation::parse(&desc).map_err(|e| schema_err(Some(i), e.to_string()))?;
        steps.push(desc);
    }
    Ok(Plan {
        version: raw.version,
        task_label: raw.task_label,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_wire_format() {
        let text = r#"{"version":"1","task_label":"cleaning","steps":[
            {"op":"fill_missing","columns":["age"],"params":{"strategy":"median"}},
            {"op":"encode_categorical","columns":["plan"],"params":{"scheme":"one_hot"}}]}"#;
        let plan = parse_plan(text).unwrap();
        assert_eq!(plan.steps.len(), 2);
        assert_eq!(plan.steps[1].op_name, "encode_categorical");
        assert_eq!(parse_plan(&plan.to_json()).unwrap(), plan);
    }

    #[test]
    fn schema_errors_name_the_step() {
        let text = r#"{"version":"1","task_label":"x","steps":[
            {"op":"fill_missing","columns":["a"],"params":{"strategy":"mean"}},{"op":"foo"}]}"#;
        assert!(matches!(
            parse_plan(text),
            Err(PlanError::Schema { step: Some(1), .. })
        ));
        let text = r#"{"version":"1","steps":[{"op":"fill_missing","params":{"strategy":3}}]}"#;
        assert!(matches!(
            parse_plan(text),
            Err(PlanError::Schema { step: Some(0), .. })
        ));
        let text = r#"{"version":"1","steps":[],"extra":1}"#;
        assert!(matches!(
            parse_plan(text),
            Err(PlanError::Schema { step: None, .. })
        ));
        let text = r#"{"version":"2","steps":[]}"#;
        assert!(matches!(
            parse_plan(text),
            Err(PlanError::Schema { step: None, .. })
        ));
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_plan("{\n  \"version\": ") {
            Err(PlanError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_steps_is_identity() {
        assert_eq!(
            parse_plan(r#"{"version":"1","task_label":"cleaning","steps":[]}"#).unwrap(),
            Plan::identity()
        );
    }
}
