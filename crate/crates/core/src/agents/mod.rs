//! Staged orchestration: define → explore → model → evaluate.
//!
//! Four stage agents and a reviewing agent talk to a pluggable planner
//! backend. Everything the backend proposes is structured (plans, model
//! specs, judgment calls) and executed by the library, so a run is fully
//! determined by its inputs, the backend replies and the seed.

mod backend;
mod batch;
mod config;
mod eda;
pub mod prompts;
mod report;
mod review;
mod workflow;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datacheck::CheckResult;
use crate::metrics::Scores;
use crate::models::{ModelSpec, PredictiveFit, Task};
use crate::perturb::{JudgmentCall, PerturbationSpec, StabilityReport};
use crate::plan::{ExecutionTrace, Plan, StageId};

pub use backend::{
    extract_json, fallback_response, BackendError, BackendRequest, Message, PlannerBackend,
    RemoteBackend, RemoteConfig, ResponseShape, Scenario, ScriptEntry, ScriptedBackend,
};
pub use batch::{run_batch, BatchResult};
pub use config::{BackendChoice, ConfigError, RunConfig, TaskChoice};
pub use eda::{EdaQuestion, EdaReport, Evidence};
pub use prompts::{render_prompt, PromptError, PromptTemplate};
pub use report::{
    create_run_dir, normalize_timestamps, render_markdown, write_run_dir, PredictionTable,
};
pub use review::{parse_review, PcsReview, Verdict};
pub use workflow::{run_workflow, Artifacts, WorkflowOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Define,
    Explore,
    Model,
    Evaluate,
    Pcs,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentRole::Define => "define",
            AgentRole::Explore => "explore",
            AgentRole::Model => "model",
            AgentRole::Evaluate => "evaluate",
            AgentRole::Pcs => "pcs",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("no target column identified")]
    NoTargetIdentified,
    #[error("target column `{0}` not found")]
    UnknownTarget(String),
    #[error("cleaning budget exhausted: {0}")]
    CleaningExhausted(String),
    #[error("perturbation failed: {0}")]
    Perturbation(String),
    #[error("no successful fits")]
    NoSuccessfulFits,
    #[error("test data does not match the training schema after replay: {0}")]
    SchemaMismatchAfterReplay(String),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Request,
    Response,
    BackendFailure,
    Note,
}

/// One entry of the append-only run memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub seq: usize,
    pub stage: StageId,
    pub role: AgentRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    pub kind: MemoryKind,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSource {
    Config,
    Backend,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDefinition {
    pub target: String,
    pub task: Task,
    pub task_source: TaskSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifier: Option<String>,
    pub variable_notes: Vec<String>,
    pub observation_unit: String,
    pub review: PcsReview,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningRecord {
    pub initial_plan: Plan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_plan: Option<Plan>,
    pub trace: ExecutionTrace,
    /// Check results of the accepted dataset (empty on failure).
    pub checks: Vec<CheckResult>,
    pub needs_human_intervention: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review: Option<PcsReview>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub calls: Vec<JudgmentCall>,
    pub specs: Vec<PerturbationSpec>,
    pub validation: BTreeMap<String, Vec<CheckResult>>,
    pub valid: Vec<String>,
    pub excluded: Vec<Exclusion>,
    /// Suggested judgment calls that matched no cleaning step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched_suggestions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelingRecord {
    pub specs: Vec<ModelSpec>,
    /// `backend` or `default`.
    pub spec_source: String,
    pub fits: Vec<PredictiveFit>,
    pub stability: StabilityReport,
    pub selected: PredictiveFit,
    pub review: PcsReview,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub dataset_id: String,
    pub model_id: String,
    pub test_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    pub review: PcsReview,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: StageId,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: String,
    pub generated_at: String,
    pub status: RunStatus,
    pub seed: u64,
    pub backend: String,
    pub config: RunConfig,
    pub stages_completed: Vec<StageId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemDefinition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cleaning: Option<CleaningRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eda: Option<EdaReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modeling: Option<ModelingRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationRecord>,
    pub memory: Vec<MemoryEntry>,
}

impl RunReport {
    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}
