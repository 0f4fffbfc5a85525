//! Run directory layout and the human-readable report.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{RunReport, WorkflowOutput};
use crate::metrics::Scores;
use crate::tabular::write_csv;

/// Test-set predictions: the identifier column when the test data has one,
/// then the predicted target.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub id: Option<(String, Vec<String>)>,
    pub target: String,
    pub values: Vec<String>,
}

impl PredictionTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = Vec::new();
        if let Some((name, _)) = &self.id {
            header.push(name.as_str());
        }
        header.push(self.target.as_str());
        // Writing to a Vec cannot fail.
        w.write_record(&header).expect("in-memory write");
        for (i, v) in self.values.iter().enumerate() {
            let mut rec = Vec::new();
            if let Some((_, ids)) = &self.id {
                rec.push(ids[i].as_str());
            }
            rec.push(v.as_str());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 input")
    }
}

/// Zeroes every wall-clock field (`generated_at`, `elapsed_us`) so two
/// reports of the same run compare equal.
pub fn normalize_timestamps(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (k, val) in map.iter_mut() {
                match k.as_str() {
                    "generated_at" => *val = Value::String(String::new()),
                    "elapsed_us" => *val = Value::from(0),
                    _ => normalize_timestamps(val),
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize_timestamps),
        _ => {}
    }
}

fn scores_table(out: &mut String, scores: &Scores) {
    let rows: Vec<(&str, f64)> = match scores {
        Scores::Classification(s) => {
            vec![
                ("accuracy", s.accuracy),
                ("f1", s.f1),
                ("precision", s.precision),
                ("recall", s.recall),
            ]
        }
        Scores::Regression(s) => vec![("rmse", s.rmse), ("mae", s.mae), ("r2", s.r2)],
    };
    out.push_str("| metric | value |\n|---|---|\n");
    for (k, v) in rows {
        let _ = writeln!(out, "| {k} | {v:.4} |");
    }
}

/// Markdown summary. Contains no wall-clock data other than the header
/// timestamp.
pub fn render_markdown(r: &RunReport) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# Run report\n");
    let _ = writeln!(o, "- generated: {}", r.generated_at);
    let _ = writeln!(o, "- status: {:?}", r.status);
    let _ = writeln!(o, "- seed: {}", r.seed);
    let _ = writeln!(o, "- backend: {}", r.backend);
    let stages: Vec<String> = r.stages_completed.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(
        o,
        "- stages completed: {}",
        if stages.is_empty() {
            "none".into()
        } else {
            stages.join(", ")
        }
    );
    if let Some(f) = &r.failure {
        let _ = writeln!(o, "- failed at {}: {}", f.stage, f.cause);
    }

    if let Some(p) = &r.problem {
        let _ = writeln!(o, "\n## Problem\n");
        let _ = writeln!(
            o,
            "- target: `{}` ({}, from {:?})",
            p.target, p.task, p.task_source
        );
        if let Some(id) = &p.identifier {
            let _ = writeln!(o, "- identifier: `{id}`");
        }
        let _ = writeln!(o, "- unit: {}", p.observation_unit);
        for n in &p.variable_notes {
            let _ = writeln!(o, "- note: {n}");
        }
    }

    if let Some(c) = &r.cleaning {
        let _ = writeln!(o, "\n## Cleaning\n");
        let _ = writeln!(o, "- repair attempts: {}", c.trace.attempts.len());
        if c.needs_human_intervention {
            let _ = writeln!(o, "- needs human intervention");
        }
        if let Some(plan) = &c.final_plan {
            let _ = writeln!(o, "\nFinal plan:\n");
            for (i, s) in plan.steps.iter().enumerate() {
                let params = serde_json::to_string(&s.params).unwrap_or_default();
                let _ = writeln!(
                    o,
                    "{}. `{}` on {} {}",
                    i + 1,
                    s.op_name,
                    s.columns.join(", "),
                    params
                );
            }
        }
        let failed: Vec<&str> = c
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        let _ = writeln!(
            o,
            "\n- checks: {} run, {} failed",
            c.checks.len(),
            failed.len()
        );
    }

    if let Some(e) = &r.eda {
        let _ = writeln!(o, "\n## Exploration\n");
        for q in &e.questions {
            let _ = writeln!(o, "**{}** {}\n", q.question, q.answer);
        }
    }

    if let Some(p) = &r.perturbation {
        let _ = writeln!(o, "\n## Perturbations\n");
        let _ = writeln!(o, "- decision points: {}", p.calls.len());
        for c in &p.calls {
            let _ = writeln!(
                o,
                "  - {} ({} alternatives)",
                c.decision_point,
                c.alternatives.len()
            );
        }
        let _ = writeln!(
            o,
            "- datasets: {} generated, {} valid",
            p.specs.len(),
            p.valid.len()
        );
        for x in &p.excluded {
            let _ = writeln!(o, "- excluded {}: {}", x.id, x.reason);
        }
    }

    if let Some(m) = &r.modeling {
        let _ = writeln!(o, "\n## Models\n");
        let _ = writeln!(o, "Model specs from {}.\n", m.spec_source);
        o.push_str("| model | datasets | mean NPS | sd | min | max |\n|---|---|---|---|---|---|\n");
        for s in &m.stability.models {
            let _ = writeln!(
                o,
                "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
                s.model_id, s.n_datasets, s.mean, s.sd, s.min, s.max
            );
        }
        let _ = writeln!(
            o,
            "\nSelected `{}` on `{}`.",
            m.selected.model_id, m.selected.dataset_id
        );
    }

    if let Some(ev) = &r.evaluation {
        let _ = writeln!(o, "\n## Evaluation\n");
        let _ = writeln!(
            o,
            "`{}` trained on `{}`, {} test rows.\n",
            ev.model_id, ev.dataset_id, ev.test_rows
        );
        if let Some(s) = &ev.scores {
            scores_table(&mut o, s);
        }
        if let Some(n) = ev.nps {
            let _ = writeln!(o, "\nNPS: {n:.4}");
        }
        if let Some(s) = &ev.summary {
            let _ = writeln!(o, "\n{s}");
        }
    }
    o
}

/// Creates a fresh `run_<timestamp>` directory under `base`; a numeric
/// suffix disambiguates runs started within the same second.
pub fn create_run_dir(base: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(base)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    for n in 0.. {
        let name = if n == 0 {
            format!("run_{stamp}")
        } else {
            format!("run_{stamp}_{n}")
        };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

fn other(e: impl std::fmt::Display) -> io::Error {
    io::Error::other(e.to_string())
}

/// Writes every artifact of a run into `dir` (see [`create_run_dir`]).
pub fn write_run_dir(dir: &Path, out: &WorkflowOutput) -> io::Result<()> {
    for sub in ["datasets", "plans", "traces", "model"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    let a = &out.artifacts;
    if let Some(clean) = &a.clean {
        write_csv(clean, &dir.join("datasets").join("clean.csv")).map_err(other)?;
    }
    for d in &a.perturbed {
        write_csv(d, &dir.join("datasets").join(format!("{}.csv", d.id()))).map_err(other)?;
    }
    for (stem, plan) in &a.plans {
        fs::write(
            dir.join("plans").join(format!("{stem}.json")),
            plan.to_json(),
        )?;
    }
    if let Some(c) = &out.report.cleaning {
        let trace = serde_json::to_string_pretty(&c.trace).map_err(other)?;
        fs::write(dir.join("traces").join("cleaning.json"), trace)?;
    }
    let memory = serde_json::to_string_pretty(&out.report.memory).map_err(other)?;
    fs::write(dir.join("traces").join("memory.json"), memory)?;
    if let Some(m) = &a.model {
        fs::write(dir.join("model").join("model.json"), m.to_canonical_json())?;
    }
    fs::write(dir.join("report.json"), out.report.to_json())?;
    fs::write(dir.join("report.md"), render_markdown(&out.report))?;
    if let Some(p) = &out.predictions {
        fs::write(dir.join("predictions.csv"), p.to_csv())?;
    }
    Ok(())
}
