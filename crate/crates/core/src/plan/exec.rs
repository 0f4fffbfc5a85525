use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{parse_plan, Plan};
use crate::mltools::{apply, FittedOp, MlError};
use crate::tabular::{ColumnSpec, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub op: String,
    pub outcome: StepOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub input_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_id: Option<String>,
    pub elapsed_us: u64,
}

/// Successful plan execution.
#[derive(Debug, Clone)]
pub struct Executed {
    pub dataset: Dataset,
    /// One per step, for replay on held-out rows.
    pub fitted: Vec<FittedOp>,
    pub steps: Vec<StepRecord>,
}

/// Failed plan execution. `steps` ends with the failed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFailed {
    pub step: usize,
    pub error: MlError,
    pub steps: Vec<StepRecord>,
}

/// Applies the steps in order, stopping at the first failure. Pure apart
/// from the recorded timings.
pub fn execute_plan(plan: &Plan, ds: &Dataset) -> Result<Executed, StepFailed> {
    let mut current = ds.clone();
    let mut fitted = Vec::with_capacity(plan.steps.len());
    let mut steps = Vec::with_capacity(plan.steps.len());
    for (index, desc) in plan.steps.iter().enumerate() {
        let started = Instant::now();
        let result = apply(&current, desc);
        let mut record = StepRecord {
            index,
            op: desc.op_name.clone(),
            outcome: StepOutcome::Ok,
            error: None,
            input_id: current.id().to_string(),
            output_id: None,
            elapsed_us: started.elapsed().as_micros() as u64,
        };
        match result {
            Ok(applied) => {
                record.output_id = Some(applied.dataset.id().to_string());
                steps.push(record);
                fitted.push(applied.fitted);
                current = applied.dataset;
            }
            Err(error) => {
                record.outcome = StepOutcome::Failed;
                record.error = Some(error.to_string());
                steps.push(record);
                return Err(StepFailed {
                    step: index,
                    error,
                    steps,
                });
            }
        }
    }
    Ok(Executed {
        dataset: current,
        fitted,
        steps,
    })
}

/// What a planner is told about a failure. `failed_step` is absent when
/// every step ran but the result was rejected by the gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairContext {
    pub plan: Plan,
    pub failed_step: Option<usize>,
    pub error: String,
    pub schema: Vec<ColumnSpec>,
}

impl RepairContext {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

/// Source of repaired plans. Returns plan text, or a transport-level error.
pub trait PlanRepairer {
    fn repair(&mut self, round: u32, context: &RepairContext) -> Result<String, String>;
}

impl<F: FnMut(u32, &RepairContext) -> Result<String, String>> PlanRepairer for F {
    fn repair(&mut self, round: u32, context: &RepairContext) -> Result<String, String> {
        self(round, context)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairAttempt {
    /// 1-based repair round.
    pub attempt: u32,
    pub context: RepairContext,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repaired_plan: Option<Plan>,
    /// `repaired`, or why no usable plan came back.
    pub outcome: String,
}

/// One record per plan execution plus one per repair round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub executions: Vec<Vec<StepRecord>>,
    pub attempts: Vec<RepairAttempt>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gate_failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairFailure {
    pub needs_human_intervention: bool,
    pub last_error: String,
}

#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub result: Result<(Executed, Plan), RepairFailure>,
    pub trace: ExecutionTrace,
}

/// Executes `plan`, then hands failures to `repairer` for at most `n_max`
/// rounds. A result that executes but fails `gate` is treated as a failure
/// too, with the gate message as the error. A round whose reply is a
/// transport error or not a plan is consumed without a new execution.
pub fn repair_loop(
    plan: &Plan,
    ds: &Dataset,
    repairer: &mut dyn PlanRepairer,
    n_max: u32,
    gate: &dyn Fn(&Dataset) -> Result<(), String>,
) -> RepairOutcome {
    let mut trace = ExecutionTrace::default();
    let mut current = plan.clone();
    let run = |p: &Plan, trace: &mut ExecutionTrace| -> Result<Executed, (Option<usize>, String)> {
        match execute_plan(p, ds) {
            Ok(done) => {
                trace.executions.push(done.steps.clone());
                match gate(&done.dataset) {
                    Ok(()) => Ok(done),
                    Err(msg) => {
                        trace.gate_failures.push(msg.clone());
                        Err((None, msg))
                    }
                }
            }
            Err(f) => {
                trace.executions.push(f.steps);
                Err((Some(f.step), f.error.to_string()))
            }
        }
    };
    let mut last = run(&current, &mut trace);
    let mut round = 0;
    loop {
        let (failed_step, error) = match last {
            Ok(done) => {
                return RepairOutcome {
                    result: Ok((done, current)),
                    trace,
                }
            }
            Err(e) => e,
        };
        if round == n_max {
            return RepairOutcome {
                result: Err(RepairFailure {
                    needs_human_intervention: true,
                    last_error: error,
                }),
                trace,
            };
        }
        round += 1;
        let context = RepairContext {
            plan: current.clone(),
            failed_step,
            error: error.clone(),
            schema: ds.columns().to_vec(),
        };
        let reply = repairer
            .repair(round, &context)
            .and_then(|text| parse_plan(&text).map_err(|e| e.to_string()));
        match reply {
            Ok(repaired) => {
                trace.attempts.push(RepairAttempt {
                    attempt: round,
                    context,
                    repaired_plan: Some(repaired.clone()),
                    outcome: "repaired".into(),
                });
                current = repaired;
                last = run(&current, &mut trace);
            }
            Err(msg) => {
                trace.attempts.push(RepairAttempt {
                    attempt: round,
                    context,
                    repaired_plan: None,
                    outcome: format!("no usable plan: {msg}"),
                });
                last = Err((failed_step, error));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mltools::OpDescriptor;
    use crate::tabular::{Cell, Dtype};

    fn ds() -> Dataset {
        Dataset::from_columns(
            "d",
            vec![(
                "age",
                Dtype::Numeric,
                vec![Cell::Numeric(1.0), Cell::Missing, Cell::Numeric(3.0)],
            )],
        )
        .unwrap()
    }

    fn fill(col: &str) -> Plan {
        Plan::new(
            "cleaning",
            vec![OpDescriptor::new("fill_missing", &[col]).param("strategy", "mean")],
        )
    }

    fn pass(_: &Dataset) -> Result<(), String> {
        Ok(())
    }

    #[test]
    fn identity_and_failure_traces() {
        let out = execute_plan(&Plan::identity(), &ds()).unwrap();
        assert!(out.dataset.value_eq(&ds()));
        let mut plan = fill("age");
        plan.steps
            .push(OpDescriptor::new("fill_missing", &["nope"]).param("strategy", "mean"));
        let err = execute_plan(&plan, &ds()).unwrap_err();
        assert_eq!(err.step, 1);
        let outcomes: Vec<StepOutcome> = err.steps.iter().map(|s| s.outcome).collect();
        assert_eq!(outcomes, vec![StepOutcome::Ok, StepOutcome::Failed]);
    }

    #[test]
    fn repaired_on_first_round() {
        let mut backend = |_: u32, ctx: &RepairContext| {
            assert_eq!(ctx.failed_step, Some(0));
            Ok(fill("age").to_json())
        };
        let out = repair_loop(&fill("agee"), &ds(), &mut backend, 3, &pass);
        assert!(out.result.is_ok());
        assert_eq!(out.trace.executions.len(), 2);
    }

    #[test]
    fn zero_budget_and_exhaustion() {
        let mut never = |_: u32, _: &RepairContext| -> Result<String, String> { unreachable!() };
        let out = repair_loop(&fill("agee"), &ds(), &mut never, 0, &pass);
        assert!(out.result.unwrap_err().needs_human_intervention);
        assert_eq!(out.trace.executions.len(), 1);

        let mut same = |_: u32, _: &RepairContext| Ok(fill("agee").to_json());
        let out = repair_loop(&fill("agee"), &ds(), &mut same, 3, &pass);
        assert!(out.result.is_err());
        assert_eq!(out.trace.executions.len(), 4);
        assert_eq!(out.trace.attempts.len(), 3);
    }

    #[test]
    fn transport_failure_consumes_round() {
        let mut calls = 0;
        let mut flaky = |_: u32, _: &RepairContext| {
            calls += 1;
            if calls == 1 {
                Err("timeout".to_string())
            } else {
                Ok(fill("age").to_json())
            }
        };
        let out = repair_loop(&fill("agee"), &ds(), &mut flaky, 2, &pass);
        assert!(out.result.is_ok());
        assert_eq!(out.trace.attempts.len(), 2);
        assert_eq!(out.trace.executions.len(), 2);
    }

    #[test]
    fn gate_rejection_is_repaired() {
        let gate = |d: &Dataset| {
            if d.missing_total() > 0 {
                Err("missing values remain".to_string())
            } else {
                Ok(())
            }
        };
        let mut backend = |_: u32, ctx: &RepairContext| {
            assert_eq!(ctx.failed_step, None);
            Ok(fill("age").to_json())
        };
        let out = repair_loop(&Plan::identity(), &ds(), &mut backend, 1, &gate);
        assert!(out.result.is_ok());
        assert_eq!(out.trace.gate_failures.len(), 1);
    }
}
