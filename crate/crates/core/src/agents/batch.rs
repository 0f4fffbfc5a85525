//! Repeated runs aggregated into validity and performance scores.

use super::backend::PlannerBackend;
use super::config::{ConfigError, RunConfig};
use super::workflow::{run_workflow, WorkflowOutput};
use crate::metrics::{MetricsInput, MetricsSummary, SubmissionTally};

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub outputs: Vec<WorkflowOutput>,
    pub tally: SubmissionTally,
    /// Test NPS of every complete run that had scorable test labels.
    pub nps: Vec<f64>,
    /// `None` when no run produced an NPS.
    pub summary: Option<MetricsSummary>,
}

/// `n` runs with seeds `cfg.seed, cfg.seed + 1, ...`; `backend_for` builds a
/// fresh backend per seed. A run counts as a valid submission when it
/// completes all stages.
pub fn run_batch(
    cfg: &RunConfig,
    backend_for: &mut dyn FnMut(u64) -> Box<dyn PlannerBackend>,
    n: u64,
) -> Result<BatchResult, ConfigError> {
    if n == 0 {
        return Err(ConfigError::Invalid(
            "a batch needs at least one run".into(),
        ));
    }
    let mut outputs = Vec::new();
    let mut successes = 0;
    let mut nps = Vec::new();
    for i in 0..n {
        let seed = cfg.seed.wrapping_add(i);
        let run_cfg = RunConfig {
            seed,
            ..cfg.clone()
        };
        let mut backend = backend_for(seed);
        let out = run_workflow(&run_cfg, backend.as_mut())?;
        if out.report.is_complete() {
            successes += 1;
            nps.extend(out.report.evaluation.as_ref().and_then(|e| e.nps));
        }
        outputs.push(out);
    }
    let tally = SubmissionTally {
        successes,
        attempts: n,
    };
    let summary = MetricsInput {
        nps: nps.clone(),
        tally,
    }
    .summarize()
    .ok();
    Ok(BatchResult {
        outputs,
        tally,
        nps,
        summary,
    })
}
