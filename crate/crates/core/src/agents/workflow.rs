use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use serde_json::{json, Value};

use super::backend::{extract_json, BackendError, BackendRequest, Message, PlannerBackend};
use super::config::{ConfigError, RunConfig};
use super::eda::{self, EdaReport};
use super::prompts::{self, render_prompt, PromptTemplate};
use super::report::PredictionTable;
use super::review::{parse_review, PcsReview};
use super::{
    AgentError, AgentRole, CleaningRecord, EvaluationRecord, Exclusion, MemoryEntry, MemoryKind,
    ModelingRecord, PerturbationRecord, ProblemDefinition, RunReport, RunStatus, StageFailure,
    TaskSource,
};
use crate::datacheck::{self, CheckConfig};
use crate::metrics::{self, Scores};
use crate::mltools::{replay, MlError, OpDescriptor, Operation};
use crate::models::{
    default_zoo, predict, train, train_grid, GridConfig, ModelError, ModelSpec, Targets, Task,
    TrainedModel,
};
use crate::perturb::{self, JudgmentCall, PerturbationSpec};
use crate::plan::{
    execute_plan, parse_plan, repair_loop, Plan, RepairContext, StageId, ToolRegistry,
};
use crate::seeding::sub_seed;
use crate::tabular::{read_csv, split_train_test, summarize, Cell, Dataset, ReadOptions, Role};

/// Files produced alongside the report.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub clean: Option<Dataset>,
    pub perturbed: Vec<Dataset>,
    /// (file stem, plan)
    pub plans: Vec<(String, Plan)>,
    pub model: Option<TrainedModel>,
}

#[derive(Debug, Clone)]
pub struct WorkflowOutput {
    pub report: RunReport,
    pub predictions: Option<PredictionTable>,
    pub artifacts: Artifacts,
}

type Bindings = BTreeMap<&'static str, String>;

struct Workflow<'a> {
    cfg: &'a RunConfig,
    backend: &'a mut dyn PlannerBackend,
    registry: ToolRegistry,
    problem_description: String,
    memory: Vec<MemoryEntry>,
    attempts: BTreeMap<(AgentRole, StageId), u32>,
    report: RunReport,
    artifacts: Artifacts,
    predictions: Option<PredictionTable>,
}

#[derive(Deserialize, Default)]
struct DefineReply {
    target: Option<String>,
    task: Option<Task>,
    #[serde(default)]
    variable_notes: Vec<String>,
    observation_unit: Option<String>,
}

#[derive(Deserialize)]
struct ModelsReply {
    models: Vec<ModelSpec>,
}

/// Everything the explore stage hands to later stages.
struct Explored {
    raw: Dataset,
    specs: Vec<PerturbationSpec>,
    calls: Vec<JudgmentCall>,
    valid: Vec<Dataset>,
}

fn schema_text(ds: &Dataset) -> String {
    let mut out = format!(
        "dataset `{}`: {} rows, {} columns\n",
        ds.name(),
        ds.n_rows(),
        ds.n_cols()
    );
    for s in summarize(ds) {
        let spec = ds.column_spec(&s.name);
        let role = spec.map(|c| c.role).unwrap_or_default();
        let mut line = format!(
            "- {} ({}, {:?}): missing {:.1}%",
            s.name,
            s.dtype,
            role,
            100.0 * s.missing_fraction
        );
        if let Some(n) = &s.numeric {
            line.push_str(&format!(
                ", min {}, median {}, max {}",
                n.min, n.median, n.max
            ));
        }
        if let Some(c) = &s.categorical {
            line.push_str(&format!(
                ", {} categories, most common `{}`",
                c.cardinality, c.top
            ));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn decision_label(op: &str) -> &'static str {
    match op {
        "fill_missing" => "imputation",
        "handle_outliers" => "outlier_treatment",
        "encode_categorical" => "encoding",
        "remove_columns" => "column_removal",
        "transform_features" => "transformation",
        "discretize_features" => "discretization",
        "select_features" => "feature_selection",
        "create_polynomial_features" => "feature_construction",
        "reduce_dimensions" => "dimension_reduction",
        _ => "step",
    }
}

fn canonical(desc: &OpDescriptor) -> Option<OpDescriptor> {
    Operation::parse(desc)
        .ok()
        .map(|op| op.to_descriptor(&desc.columns))
}

/// One decision point per cleaning step, with the step itself as the
/// reference alternative. Suggested alternatives join the step with the
/// same decision point name, or else the first step with the same operation
/// and columns; alternatives on other columns and duplicates are dropped.
pub(crate) fn build_calls(
    plan: &Plan,
    suggestions: &[JudgmentCall],
) -> (Vec<JudgmentCall>, Vec<String>) {
    let mut calls: Vec<JudgmentCall> = Vec::new();
    let mut names = BTreeSet::new();
    for (i, step) in plan.steps.iter().enumerate() {
        let mut name = format!(
            "{}[{}]",
            decision_label(&step.op_name),
            step.columns.join(",")
        );
        if !names.insert(name.clone()) {
            name = format!("{name}#{i}");
            names.insert(name.clone());
        }
        calls.push(JudgmentCall::fixed(name, step.clone()));
    }
    let mut unmatched = Vec::new();
    for s in suggestions {
        let target = calls
            .iter()
            .position(|c| c.decision_point == s.decision_point)
            .or_else(|| {
                let first = s.alternatives.first()?;
                calls.iter().position(|c| {
                    c.alternatives[0].op_name == first.op_name
                        && c.alternatives[0].columns == first.columns
                })
            });
        let Some(t) = target else {
            unmatched.push(s.decision_point.clone());
            continue;
        };
        for alt in &s.alternatives {
            let call = &mut calls[t];
            if alt.columns != call.alternatives[0].columns {
                continue;
            }
            let canon = canonical(alt);
            if canon.is_none() || call.alternatives.iter().any(|a| canonical(a) == canon) {
                continue;
            }
            call.alternatives.push(alt.clone());
        }
    }
    (calls, unmatched)
}

fn truth(ds: &Dataset, target: &str, task: Task) -> Option<(Vec<usize>, Targets)> {
    let t = ds.column_index(target)?;
    let rows: Vec<usize> = ds
        .cells(t)
        .enumerate()
        .filter(|(_, c)| !c.is_missing())
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return None;
    }
    let cells: Vec<&Cell> = rows.iter().map(|&i| &ds.rows()[i][t]).collect();
    let values = match task {
        Task::Classification => Targets::Labels(cells.iter().map(|c| c.render()).collect()),
        Task::Regression => Targets::Values(cells.iter().filter_map(|c| c.as_f64()).collect()),
    };
    (values.len() == rows.len()).then_some((rows, values))
}

fn score(truth: &Targets, pred: &Targets, rows: &[usize]) -> Result<Scores, AgentError> {
    let err = |e: metrics::MetricsError| AgentError::Other(e.to_string());
    match (truth, pred) {
        (Targets::Labels(t), Targets::Labels(p)) => {
            let p: Vec<String> = rows.iter().map(|&i| p[i].clone()).collect();
            metrics::classification_scores(t, &p)
                .map(Scores::Classification)
                .map_err(err)
        }
        (Targets::Values(t), Targets::Values(p)) => {
            let p: Vec<f64> = rows.iter().map(|&i| p[i]).collect();
            metrics::regression_scores(t, &p)
                .map(Scores::Regression)
                .map_err(err)
        }
        _ => Err(AgentError::Other(
            "prediction kind does not match the task".into(),
        )),
    }
}

impl<'a> Workflow<'a> {
    fn note(
        &mut self,
        stage: StageId,
        role: AgentRole,
        kind: MemoryKind,
        attempt: Option<u32>,
        content: String,
    ) {
        let seq = self.memory.len();
        self.memory.push(MemoryEntry {
            seq,
            stage,
            role,
            attempt,
            kind,
            content,
        });
    }

    fn bindings(&self, context: String, conclusion: String, result: String) -> Bindings {
        BTreeMap::from([
            ("problem_description", self.problem_description.clone()),
            ("context_description", context),
            ("conclusion", conclusion),
            ("result", result),
        ])
    }

    fn ask(
        &mut self,
        tpl: &PromptTemplate,
        stage: StageId,
        bindings: &Bindings,
        repair: Option<RepairContext>,
    ) -> Result<String, BackendError> {
        let key = (tpl.role, stage);
        let attempt = *self.attempts.get(&key).unwrap_or(&0);
        self.attempts.insert(key, attempt + 1);
        let (system, task) =
            render_prompt(tpl, bindings).map_err(|e| BackendError::Config(e.to_string()))?;
        self.note(
            stage,
            tpl.role,
            MemoryKind::Request,
            Some(attempt),
            task.clone(),
        );
        let request = BackendRequest {
            role: tpl.role,
            stage,
            attempt,
            messages: vec![
                Message {
                    role: "system".into(),
                    content: system,
                },
                Message {
                    role: "user".into(),
                    content: task,
                },
            ],
            response_shape: tpl.shape,
            repair,
        };
        let reply = self.backend.respond(&request);
        match &reply {
            Ok(text) => self.note(
                stage,
                tpl.role,
                MemoryKind::Response,
                Some(attempt),
                text.clone(),
            ),
            Err(e) => self.note(
                stage,
                tpl.role,
                MemoryKind::BackendFailure,
                Some(attempt),
                e.to_string(),
            ),
        }
        reply
    }

    /// Advisory review: one retry on an unusable reply, then the reply is
    /// kept verbatim with an accepting verdict.
    fn review(
        &mut self,
        stage: StageId,
        context: String,
        conclusion: String,
        result: String,
    ) -> PcsReview {
        let b = self.bindings(context, conclusion, result);
        let mut last = String::new();
        for _ in 0..2 {
            match self.ask(&prompts::PCS, stage, &b, None) {
                Ok(text) => match parse_review(&text) {
                    Ok(r) => return r,
                    Err(e) => {
                        self.note(
                            stage,
                            AgentRole::Pcs,
                            MemoryKind::Note,
                            None,
                            format!("unusable review: {e}"),
                        );
                        last = text;
                    }
                },
                Err(e) => last = e.to_string(),
            }
        }
        PcsReview::unparsed(last)
    }

    fn define(&mut self, raw: &Dataset) -> Result<ProblemDefinition, AgentError> {
        let stage = StageId::Define;
        let context = schema_text(raw);
        let b = self.bindings(context.clone(), String::new(), String::new());
        let reply: DefineReply = match self.ask(&prompts::DEFINE, stage, &b, None) {
            Ok(text) => extract_json(&text)
                .and_then(|v| serde_json::from_value(v).ok())
                .unwrap_or_else(|| {
                    self.note(
                        stage,
                        AgentRole::Define,
                        MemoryKind::Note,
                        None,
                        "reply not used: no definition object".into(),
                    );
                    DefineReply::default()
                }),
            Err(_) => DefineReply::default(),
        };
        let target = match (&self.cfg.target, &reply.target) {
            (Some(t), _) => {
                if raw.column_index(t).is_none() {
                    return Err(AgentError::UnknownTarget(t.clone()));
                }
                t.clone()
            }
            (None, Some(t)) if raw.column_index(t).is_some() => t.clone(),
            _ => return Err(AgentError::NoTargetIdentified),
        };
        let dtype = raw
            .column_spec(&target)
            .map(|c| c.dtype)
            .ok_or(AgentError::NoTargetIdentified)?;
        let (task, task_source) = match (self.cfg.task.fixed(), reply.task) {
            (Some(t), _) => (t, TaskSource::Config),
            (None, Some(t)) => (t, TaskSource::Backend),
            (None, None) => (Task::infer(dtype), TaskSource::Heuristic),
        };
        let identifier = raw
            .columns()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.name != target)
            .find(|(i, c)| {
                let lower = c.name.to_ascii_lowercase();
                (lower == "id" || lower.ends_with("_id")) && eda::all_unique(raw, *i)
            })
            .map(|(_, c)| c.name.clone());
        if self.problem_description.is_empty() {
            self.problem_description = format!(
                "Predict `{target}` ({task}) from the other columns of `{}`.",
                raw.name()
            );
        }
        let mut def = ProblemDefinition {
            target,
            task,
            task_source,
            identifier,
            variable_notes: reply.variable_notes,
            observation_unit: reply
                .observation_unit
                .unwrap_or_else(|| "one row per record".into()),
            review: PcsReview::unparsed(String::new()),
        };
        let result = serde_json::to_string_pretty(&def).unwrap_or_default();
        def.review = self.review(stage, context, "problem definition".into(), result);
        Ok(def)
    }

    fn explore(&mut self, raw: &Dataset, def: &ProblemDefinition) -> Result<Explored, AgentError> {
        let stage = StageId::Explore;
        let context = format!(
            "{}\nOperations:\n{}",
            schema_text(raw),
            self.registry.describe(StageId::Explore)
        );
        let conclusion = serde_json::to_string(&json!({
            "target": def.target, "task": def.task, "identifier": def.identifier
        }))
        .unwrap_or_default();
        let b = self.bindings(context.clone(), conclusion.clone(), String::new());
        let initial = match self
            .ask(&prompts::EXPLORE, stage, &b, None)
            .map(|t| parse_plan(&t))
        {
            Ok(Ok(p)) => p,
            other => {
                let why = match other {
                    Ok(Err(e)) => e.to_string(),
                    Err(e) => e.to_string(),
                    Ok(Ok(_)) => unreachable!(),
                };
                self.note(
                    stage,
                    AgentRole::Explore,
                    MemoryKind::Note,
                    None,
                    format!("starting from the identity plan: {why}"),
                );
                Plan::identity()
            }
        };

        let checks: CheckConfig = self.cfg.checks.clone();
        let gate = |d: &Dataset| {
            let results = datacheck::run_suite(d, raw, &checks);
            if datacheck::suite_passed(&results) {
                Ok(())
            } else {
                Err(format!(
                    "data checks failed: {}",
                    datacheck::failure_summary(&results).join("; ")
                ))
            }
        };
        let n_max = self.cfg.n_max;
        let outcome = {
            let mut repairer = |_: u32, ctx: &RepairContext| -> Result<String, String> {
                let b = self.bindings(context.clone(), ctx.error.clone(), ctx.to_json());
                self.ask(&prompts::REPAIR, stage, &b, Some(ctx.clone()))
                    .map_err(|e| e.to_string())
            };
            repair_loop(&initial, raw, &mut repairer, n_max, &gate)
        };
        let mut record = CleaningRecord {
            initial_plan: initial,
            final_plan: None,
            trace: outcome.trace,
            checks: Vec::new(),
            needs_human_intervention: false,
            review: None,
        };
        let (done, plan) = match outcome.result {
            Ok(ok) => ok,
            Err(f) => {
                record.needs_human_intervention = f.needs_human_intervention;
                self.report.cleaning = Some(record);
                return Err(AgentError::CleaningExhausted(f.last_error));
            }
        };
        let clean = done.dataset;
        record.checks = datacheck::run_suite(&clean, raw, &self.cfg.checks);
        record.final_plan = Some(plan.clone());
        self.artifacts.plans.push(("cleaning".into(), plan.clone()));
        self.artifacts.clean = Some(clean.clone());

        let eda: EdaReport = eda::explore(raw, &clean, &def.target, def.task);
        let result =
            serde_json::to_string_pretty(&json!({"plan": plan, "eda_questions": eda.questions}))
                .unwrap_or_default();
        let review = self.review(
            stage,
            context,
            "cleaning plan and exploratory findings".into(),
            result,
        );
        let suggestions = review.judgment_calls.clone();
        record.review = Some(review);
        self.report.cleaning = Some(record);
        self.report.eda = Some(eda);

        let (calls, unmatched) = build_calls(&plan, &suggestions);
        let specs = if calls.is_empty() {
            let id = "p_000".to_string();
            vec![PerturbationSpec {
                seed: sub_seed(self.cfg.seed, &id),
                id,
                choices: BTreeMap::new(),
            }]
        } else {
            perturb::enumerate_specs(&calls, self.cfg.k, self.cfg.seed)
                .map_err(|e| AgentError::Perturbation(e.to_string()))?
        };
        let materialized = perturb::materialize_all(raw, &specs, &calls, self.cfg.jobs);
        let mut excluded = Vec::new();
        let mut built = Vec::new();
        for (spec, m) in specs.iter().zip(materialized) {
            match m {
                Ok(d) => built.push(d),
                Err(e) => excluded.push(Exclusion {
                    id: spec.id.clone(),
                    reason: e.to_string(),
                }),
            }
        }
        let validation = perturb::validate_all(&built, raw, &self.cfg.checks);
        let mut valid = Vec::new();
        for d in &built {
            let results = &validation[d.id()];
            if datacheck::suite_passed(results) {
                valid.push(d.clone());
            } else {
                excluded.push(Exclusion {
                    id: d.id().to_string(),
                    reason: datacheck::failure_summary(results).join("; "),
                });
            }
        }
        excluded.sort_by(|a, b| a.id.cmp(&b.id));
        for spec in &specs {
            if let Ok(p) = perturb::spec_plan(spec, &calls) {
                self.artifacts.plans.push((spec.id.clone(), p));
            }
        }
        self.artifacts.perturbed = built;
        self.report.perturbation = Some(PerturbationRecord {
            calls: calls.clone(),
            specs: specs.clone(),
            validation,
            valid: valid.iter().map(|d| d.id().to_string()).collect(),
            excluded,
            unmatched_suggestions: unmatched,
        });
        if valid.is_empty() {
            return Err(AgentError::Perturbation(
                "every perturbed dataset failed validation".into(),
            ));
        }
        Ok(Explored {
            raw: raw.clone(),
            specs,
            calls,
            valid,
        })
    }

    fn model(
        &mut self,
        ex: &Explored,
        def: &ProblemDefinition,
    ) -> Result<ModelingRecord, AgentError> {
        let stage = StageId::Model;
        let first = &ex.valid[0];
        let context = schema_text(first);
        let conclusion = self
            .report
            .eda
            .as_ref()
            .map(|e| {
                e.questions
                    .iter()
                    .map(|q| q.answer.clone())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .unwrap_or_default();
        let b = self.bindings(context.clone(), conclusion, String::new());
        let proposed = self
            .ask(&prompts::MODEL, stage, &b, None)
            .ok()
            .and_then(|t| extract_json(&t))
            .and_then(|v| serde_json::from_value::<ModelsReply>(v).ok())
            .map(|r| r.models)
            .unwrap_or_default();
        let (specs, spec_source) = if proposed.is_empty() {
            (default_zoo(def.task), "default".to_string())
        } else {
            (proposed, "backend".to_string())
        };
        let grid = GridConfig {
            jobs: self.cfg.jobs.max(1),
            ..GridConfig::new(def.task, self.cfg.seed)
        };
        let fits = train_grid(&ex.valid, &specs, &def.target, &grid);
        let stability =
            perturb::stability_report(&fits).map_err(|_| AgentError::NoSuccessfulFits)?;
        let selected = stability.best_fit.clone();
        let result = serde_json::to_string_pretty(&stability).unwrap_or_default();
        let review = self.review(
            stage,
            context,
            format!("selected {} on {}", selected.model_id, selected.dataset_id),
            result,
        );
        Ok(ModelingRecord {
            specs,
            spec_source,
            fits,
            stability,
            selected,
            review,
        })
    }

    fn evaluate(
        &mut self,
        ex: &Explored,
        def: &ProblemDefinition,
        modeling: &ModelingRecord,
        test: &Dataset,
    ) -> Result<EvaluationRecord, AgentError> {
        let stage = StageId::Evaluate;
        let sel = &modeling.selected;
        let other = |m: &str| AgentError::Other(m.to_string());
        let spec = ex
            .specs
            .iter()
            .find(|s| s.id == sel.dataset_id)
            .ok_or_else(|| other("selected dataset unknown"))?;
        let model_spec = modeling
            .specs
            .iter()
            .find(|s| s.id == sel.model_id)
            .ok_or_else(|| other("selected model unknown"))?;
        let plan = perturb::spec_plan(spec, &ex.calls).map_err(|e| other(&e.to_string()))?;
        let fitted = execute_plan(&plan, &ex.raw).map_err(|f| other(&f.error.to_string()))?;
        let train_ds = fitted.dataset.with_id(spec.id.clone());
        let model = train(
            &train_ds,
            &def.target,
            model_spec,
            sub_seed(self.cfg.seed, "final"),
        )
        .map_err(|e| other(&e.to_string()))?;

        let mut test_ds = test.clone();
        for f in &fitted.fitted {
            test_ds = replay(&test_ds, f, Some(&def.target)).map_err(|e| match e {
                MlError::UnknownColumn(_) | MlError::DtypeMismatch { .. } => {
                    AgentError::SchemaMismatchAfterReplay(e.to_string())
                }
                e => other(&e.to_string()),
            })?;
        }
        let pred = predict(&model, &test_ds).map_err(|e| match e {
            ModelError::MissingFeatureColumn(_) | ModelError::NonNumericFeature { .. } => {
                AgentError::SchemaMismatchAfterReplay(e.to_string())
            }
            e => other(&e.to_string()),
        })?;
        let (scores, nps) = match truth(&test_ds, &def.target, def.task) {
            Some((rows, t)) => {
                let s = score(&t, &pred.values, &rows)?;
                (Some(s), Some(metrics::nps(&s)))
            }
            None => (None, None),
        };

        let values: Vec<String> = match &pred.values {
            Targets::Labels(l) => l.clone(),
            Targets::Values(v) => v.iter().map(|x| format!("{x}")).collect(),
        };
        let id = def.identifier.as_ref().and_then(|name| {
            let i = test.column_index(name)?;
            Some((name.clone(), test.cells(i).map(Cell::render).collect()))
        });
        self.predictions = Some(PredictionTable {
            id,
            target: def.target.clone(),
            values,
        });
        self.artifacts.model = Some(model);

        let result = json!({"scores": scores, "nps": nps, "test_rows": test.n_rows()}).to_string();
        let b = self.bindings(
            schema_text(&test_ds),
            format!("{} trained on {}", sel.model_id, sel.dataset_id),
            result.clone(),
        );
        let summary = self
            .ask(&prompts::EVALUATE, stage, &b, None)
            .ok()
            .and_then(|t| extract_json(&t))
            .and_then(|v| v.get("summary").and_then(Value::as_str).map(str::to_string));
        let review = self.review(
            stage,
            schema_text(&test_ds),
            "held-out evaluation".into(),
            result,
        );
        Ok(EvaluationRecord {
            dataset_id: sel.dataset_id.clone(),
            model_id: sel.model_id.clone(),
            test_rows: test.n_rows(),
            scores,
            nps,
            summary,
            review,
        })
    }

    fn run(&mut self, raw: Dataset, test: Option<Dataset>) -> Result<(), (StageId, AgentError)> {
        let def = self.define(&raw).map_err(|e| (StageId::Define, e))?;
        self.report.problem = Some(def.clone());
        self.report.stages_completed.push(StageId::Define);

        let tag = |d: &Dataset| -> Dataset {
            let mut d = d.clone();
            if d.column_index(&def.target).is_some() {
                d = d.with_role(&def.target, Role::Target).unwrap_or(d);
            }
            if let Some(id) = &def.identifier {
                if d.column_index(id).is_some() {
                    d = d.with_role(id, Role::Identifier).unwrap_or(d);
                }
            }
            d
        };
        let (train_raw, test) = match test {
            Some(t) => (tag(&raw), tag(&t)),
            None => {
                let (tr, te) = split_train_test(
                    &raw,
                    self.cfg.holdout_fraction,
                    sub_seed(self.cfg.seed, "holdout"),
                )
                .map_err(|e| (StageId::Define, AgentError::Other(e.to_string())))?;
                (tag(&tr), tag(&te))
            }
        };

        let explored = self
            .explore(&train_raw, &def)
            .map_err(|e| (StageId::Explore, e))?;
        self.report.stages_completed.push(StageId::Explore);

        let modeling = self
            .model(&explored, &def)
            .map_err(|e| (StageId::Model, e))?;
        self.report.modeling = Some(modeling.clone());
        self.report.stages_completed.push(StageId::Model);

        let evaluation = self
            .evaluate(&explored, &def, &modeling, &test)
            .map_err(|e| (StageId::Evaluate, e))?;
        self.report.evaluation = Some(evaluation);
        self.report.stages_completed.push(StageId::Evaluate);
        Ok(())
    }
}

/// Runs all four stages. Configuration and input-file problems are errors;
/// a stage failure is reported inside the returned report
/// (`status: failed`).
pub fn run_workflow(
    cfg: &RunConfig,
    backend: &mut dyn PlannerBackend,
) -> Result<WorkflowOutput, ConfigError> {
    cfg.validate()?;
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("a data file is required".into()))?;
    let unreadable =
        |p: &std::path::Path, e: crate::tabular::TabularError| ConfigError::Unreadable {
            path: p.display().to_string(),
            reason: e.to_string(),
        };
    let raw = read_csv(data, &ReadOptions::default()).map_err(|e| unreadable(data, e))?;
    let test = match &cfg.test {
        Some(path) => {
            let opts = ReadOptions {
                dtype_overrides: raw
                    .columns()
                    .iter()
                    .map(|c| (c.name.clone(), c.dtype))
                    .collect(),
                ..ReadOptions::default()
            };
            Some(read_csv(path, &opts).map_err(|e| unreadable(path, e))?)
        }
        None => None,
    };

    let report = RunReport {
        format_version: "1".into(),
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        status: RunStatus::Failed,
        seed: cfg.seed,
        backend: backend.name(),
        config: cfg.clone(),
        stages_completed: Vec::new(),
        failure: None,
        problem: None,
        cleaning: None,
        eda: None,
        perturbation: None,
        modeling: None,
        evaluation: None,
        memory: Vec::new(),
    };
    let mut wf = Workflow {
        cfg,
        backend,
        registry: ToolRegistry::default(),
        problem_description: cfg.problem_description.clone().unwrap_or_default(),
        memory: Vec::new(),
        attempts: BTreeMap::new(),
        report,
        artifacts: Artifacts::default(),
        predictions: None,
    };
    match wf.run(raw, test) {
        Ok(()) => wf.report.status = RunStatus::Complete,
        Err((stage, cause)) => {
            wf.report.failure = Some(StageFailure {
                stage,
                cause: cause.to_string(),
            });
            wf.predictions = None;
        }
    }
    wf.report.memory = std::mem::take(&mut wf.memory);
    Ok(WorkflowOutput {
        report: wf.report,
        predictions: wf.predictions,
        artifacts: wf.artifacts,
    })
}
