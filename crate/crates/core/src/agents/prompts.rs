//! Prompt templates and single-pass placeholder substitution.

use std::collections::BTreeMap;

use thiserror::Error;

use super::backend::ResponseShape;
use super::AgentRole;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("no binding for placeholder `{0}`")]
    MissingBinding(String),
}

/// Placeholders every template may use.
pub const PLACEHOLDERS: &[&str] = &[
    "problem_description",
    "context_description",
    "conclusion",
    "result",
];

#[derive(Debug, Clone, Copy)]
pub struct PromptTemplate {
    pub role: AgentRole,
    pub system: &'static str,
    pub task: &'static str,
    pub shape: ResponseShape,
}

/// Placeholder names in `text`: `{` + `[a-z_]+` + `}`. Other braces (JSON
/// examples) are literal.
pub fn placeholders(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let len = after
            .bytes()
            .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
            .count();
        if len > 0 && after.as_bytes().get(len) == Some(&b'}') {
            out.push(&after[..len]);
            rest = &after[len + 1..];
        } else {
            rest = after;
        }
    }
    out
}

fn substitute(text: &str, bindings: &BTreeMap<&str, String>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let len = after
            .bytes()
            .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
            .count();
        if len > 0 && after.as_bytes().get(len) == Some(&b'}') {
            let name = &after[..len];
            let value = bindings
                .get(name)
                .ok_or_else(|| PromptError::MissingBinding(name.to_string()))?;
            out.push_str(value);
            rest = &after[len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Literal substitution of every placeholder; inserted values are never
/// re-scanned.
pub fn render_prompt(
    tpl: &PromptTemplate,
    bindings: &BTreeMap<&str, String>,
) -> Result<(String, String), PromptError> {
    Ok((
        substitute(tpl.system, bindings)?,
        substitute(tpl.task, bindings)?,
    ))
}

pub const DEFINE: PromptTemplate = PromptTemplate {
    role: AgentRole::Define,
    system: "You frame data-science problems before any analysis starts.\n\
Problem: {problem_description}\n\
Dataset overview:\n{context_description}",
    task:
        "Identify the response variable, decide whether the task is classification or regression, \
and note which variables look relevant and what one row represents.\n\
Earlier conclusions: {conclusion}\n\
Answer with one JSON object: {\"target\": string, \"task\": \"classification\"|\"regression\", \
\"variable_notes\": [string], \"observation_unit\": string}.{result}",
    shape: ResponseShape::ProblemDefinition,
};

pub const EXPLORE: PromptTemplate = PromptTemplate {
    role: AgentRole::Explore,
    system: "You prepare tabular data for modeling using only the listed operations.\n\
Problem: {problem_description}\n\
Columns and available operations:\n{context_description}",
    task: "Write a cleaning plan that leaves no missing values, handles outliers, and encodes \
categorical features so every feature is numeric. Never modify the target or identifier columns.\n\
Problem definition: {conclusion}\n\
Reply with a plan document: {\"version\": \"1\", \"task_label\": \"cleaning\", \
\"steps\": [{\"op\": name, \"columns\": [..], \"params\": {..}}]}.{result}",
    shape: ResponseShape::Plan,
};

pub const REPAIR: PromptTemplate = PromptTemplate {
    role: AgentRole::Explore,
    system: "You fix cleaning plans that failed to run or failed data checks.\n\
Problem: {problem_description}\n\
Columns and available operations:\n{context_description}",
    task: "The plan below did not produce an acceptable dataset.\n\
Failure: {conclusion}\n\
Details (plan, failed step, error, schema):\n{result}\n\
Return the full corrected plan document and nothing else.",
    shape: ResponseShape::Plan,
};

pub const MODEL: PromptTemplate = PromptTemplate {
    role: AgentRole::Model,
    system: "You choose candidate models for a prepared tabular dataset.\n\
Problem: {problem_description}\n\
Prepared data:\n{context_description}",
    task: "Propose model specifications to compare. Families: mean_baseline, majority_baseline, \
linear_regression (lambda), logistic_regression (learning_rate, iterations, lambda), knn (k), \
decision_tree (max_depth, min_leaf).\n\
Findings so far: {conclusion}\n\
Reply with {\"models\": [{\"id\": string, \"task\": string, \"family\": string, ...}]}; \
an empty list selects the default set.{result}",
    shape: ResponseShape::ModelSpecs,
};

pub const EVALUATE: PromptTemplate = PromptTemplate {
    role: AgentRole::Evaluate,
    system: "You assess a trained model on held-out data.\n\
Problem: {problem_description}\n\
Context:\n{context_description}",
    task: "Summarize what the held-out results say about the selected model.\n\
Selected model: {conclusion}\n\
Held-out results: {result}\n\
Reply with {\"summary\": string}.",
    shape: ResponseShape::Evaluation,
};

pub const PCS: PromptTemplate = PromptTemplate {
    role: AgentRole::Pcs,
    system: "You review the work of other analysis agents for predictability and stability.\n\
Problem: {problem_description}\n\
Context:\n{context_description}",
    task:
        "Review the output below. Judge whether it would hold up on new data (predictability) and \
whether reasonable alternative choices would change it (stability). Where a cleaning choice is a \
judgment call, list alternatives as plan steps on the same columns.\n\
Stage conclusion: {conclusion}\n\
Output under review:\n{result}\n\
Reply with {\"Predictability\": string, \"Stability\": string, \"verdict\": \"accept\"|\"revise\", \
\"judgment_calls\": [{\"decision_point\": string, \"alternatives\": [step, ..]}]}.",
    shape: ResponseShape::Review,
};

pub const ALL: [&PromptTemplate; 6] = [&DEFINE, &EXPLORE, &REPAIR, &MODEL, &EVALUATE, &PCS];
