//! Acceptance suite. Prints one PASS/FAIL line per criterion on stdout and
//! fails if any reproducible criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pcsflow_core::agents::{
    normalize_timestamps, run_batch, run_workflow, PlannerBackend, RunConfig, Scenario,
    ScriptedBackend,
};
use pcsflow_core::datacheck::{
    run_suite, suite_passed, test_data_retention, test_duplicated_features, test_duplicated_rows,
    CheckConfig,
};
use pcsflow_core::metrics::{
    classification_scores, cs, nps, nps_regression, vs, MetricsInput, RegressionScores, Scores,
    SubmissionTally,
};
use pcsflow_core::plan::StageId;
use pcsflow_core::tabular::{read_csv_str, Cell, Dataset, Dtype, ReadOptions};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn toy(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures/toy")
        .join(name)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn toy_config(seed: u64) -> RunConfig {
    RunConfig {
        data: Some(toy("toy.csv")),
        test: Some(toy("toy_test.csv")),
        seed,
        ..RunConfig::default()
    }
}

fn metric_arithmetic() -> Outcome {
    // (successes, attempts, ANPS, printed CS)
    let rows = [
        ("adult/a", 5, 6, 0.848, 0.841),
        ("obesity/a", 5, 5, 0.900, 0.950),
        ("adult/b", 5, 5, 0.832, 0.916),
    ];
    let mut worst: f64 = 0.0;
    for (name, s, t, anps, printed) in rows {
        let got = cs(vs(&SubmissionTally::new(s, t).unwrap()), anps);
        worst = worst.max((got - printed).abs());
        ensure(
            (got - printed).abs() <= 1e-3,
            format!("{name}: CS {got:.4} vs {printed}"),
        )?;
    }
    let input =
        MetricsInput::parse(&fs::read_to_string(toy("metrics_adult.json")).unwrap()).unwrap();
    let summary = input.summarize().unwrap();
    ensure(
        (summary.cs - 0.841).abs() <= 1e-3,
        format!("fixture CS {:.4}", summary.cs),
    )?;
    Ok(format!("max |dCS| = {worst:.4}"))
}

fn vs_granularity() -> Outcome {
    let want = ["1.000", "0.833", "0.714", "0.625", "0.556", "0.455"];
    for (t, w) in [5, 6, 7, 8, 9, 11].into_iter().zip(want) {
        let got = format!("{:.3}", vs(&SubmissionTally::new(5, t).unwrap()));
        ensure(got == w, format!("vs(5,{t}) = {got}, want {w}"))?;
    }
    Ok("vs(5,T) matches for T in {5,6,7,8,9,11}".into())
}

fn nps_bounds() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&prop::collection::vec(0usize..30, 9), |counts| {
            let (mut truth, mut pred) = (Vec::new(), Vec::new());
            for (cell, &c) in counts.iter().enumerate() {
                truth.extend(std::iter::repeat_n(cell / 3, c));
                pred.extend(std::iter::repeat_n(cell % 3, c));
            }
            if truth.is_empty() {
                return Ok(());
            }
            let v = nps(&Scores::Classification(
                classification_scores(&truth, &pred).unwrap(),
            ));
            prop_assert!((0.0..=1.0).contains(&v), "classification NPS {}", v);
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let negatives = std::cell::Cell::new(0usize);
    runner
        .run(
            &(0.0..100.0f64, 0.0..100.0f64, -50.0..-1e-9f64),
            |(rmse, mae, r2)| {
                let v = nps_regression(&RegressionScores {
                    rmse,
                    mae,
                    r2,
                    r2_sentinel: false,
                });
                prop_assert!(v.is_finite() && v < 1.0);
                negatives.set(negatives.get() + usize::from(v < 0.0));
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    ensure(
        negatives.get() > 0,
        "no negative regression NPS among 1000 triples",
    )?;
    Ok(format!(
        "classification NPS in [0,1]; {} of 1000 regression NPS negative",
        negatives.get()
    ))
}

/// The toy scenario with the broken first plan repeated until attempt `fix_at`.
fn fault_scenario(fix_at: u32) -> Scenario {
    let mut s = Scenario::load(&toy("scenario.json")).unwrap();
    let is_plan =
        |e: &pcsflow_core::agents::ScriptEntry| e.stage == StageId::Explore && e.attempt.is_some();
    let fixed = s
        .responses
        .iter()
        .find(|e| is_plan(e) && e.attempt == Some(1))
        .unwrap()
        .clone();
    let mut broken = s
        .responses
        .iter()
        .find(|e| is_plan(e) && e.attempt == Some(0))
        .unwrap()
        .clone();
    s.responses.retain(|e| !is_plan(e));
    for attempt in 0..fix_at {
        broken.attempt = Some(attempt);
        s.responses.push(broken.clone());
    }
    s.responses.push(pcsflow_core::agents::ScriptEntry {
        attempt: Some(fix_at),
        ..fixed
    });
    s
}

fn repair_monotonicity() -> Outcome {
    let mut lines = Vec::new();
    for fix_at in 1..=3u32 {
        let scenario = fault_scenario(fix_at);
        let mut curve = Vec::new();
        for n_max in 0..=3u32 {
            let cfg = RunConfig {
                n_max,
                k: 1,
                ..toy_config(100)
            };
            let mut make = |_seed: u64| -> Box<dyn PlannerBackend> {
                Box::new(ScriptedBackend::new(scenario.clone()))
            };
            let batch = run_batch(&cfg, &mut make, 20).map_err(|e| e.to_string())?;
            curve.push(vs(&batch.tally));
        }
        ensure(
            curve.windows(2).all(|w| w[0] <= w[1]),
            format!("a={fix_at}: VS not monotone {curve:?}"),
        )?;
        for (n_max, v) in curve.iter().enumerate() {
            if n_max as u32 >= fix_at {
                ensure(*v == 1.0, format!("a={fix_at}: VS {v} at n_max={n_max}"))?;
            }
        }
        lines.push(format!("a={fix_at}: {curve:?}"));
    }
    Ok(lines.join("; "))
}

fn stability_protocol() -> Outcome {
    let cfg = RunConfig {
        k: 6,
        ..toy_config(11)
    };
    let mut backend = ScriptedBackend::new(Scenario::load(&toy("scenario.json")).unwrap());
    let out = run_workflow(&cfg, &mut backend).map_err(|e| e.to_string())?;
    let p = out
        .report
        .perturbation
        .as_ref()
        .ok_or("no perturbation record")?;
    let mut shape: Vec<usize> = p
        .calls
        .iter()
        .map(|c| c.alternatives.len())
        .filter(|&n| n > 1)
        .collect();
    shape.sort();
    ensure(shape == [2, 3], format!("grid shape {shape:?}"))?;
    ensure(
        p.specs.len() == 6 && p.valid.len() == 6,
        format!("{} specs, {} valid", p.specs.len(), p.valid.len()),
    )?;
    ensure(
        p.validation.values().all(|r| suite_passed(r)),
        "a perturbed dataset failed the check suite",
    )?;
    let m = out.report.modeling.as_ref().ok_or("no modeling record")?;
    ensure(
        m.fits.len() == 24 && m.fits.iter().all(|f| f.succeeded()),
        format!("{} fits", m.fits.len()),
    )?;
    ensure(
        m.stability.models.len() == 4,
        "stability report should cover 4 models",
    )?;
    let mut worst: f64 = 0.0;
    for s in &m.stability.models {
        let v: Vec<f64> = m
            .fits
            .iter()
            .filter(|f| f.model_id == s.model_id)
            .filter_map(|f| f.nps)
            .collect();
        ensure(
            v.len() == 6,
            format!("{}: {} datasets", s.model_id, v.len()),
        )?;
        let sd = common::pop_var(&v).sqrt();
        worst = worst
            .max((sd - s.sd).abs())
            .max((common::mean(&v) - s.mean).abs());
    }
    ensure(worst <= 1e-12, format!("SD recompute differs by {worst:e}"))?;
    Ok(format!(
        "6 datasets x 4 models, max SD/mean deviation {worst:e}"
    ))
}

fn end_to_end_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (data, test, out) = (
        toy("toy.csv"),
        toy("toy_test.csv"),
        tmp.path().display().to_string(),
    );
    let backend = format!("scripted:{}", toy("scenario.json").display());
    for _ in 0..2 {
        let o = Command::new(env!("CARGO_BIN_EXE_pcsflow"))
            .args([
                "run",
                "--data",
                data.to_str().unwrap(),
                "--test",
                test.to_str().unwrap(),
            ])
            .args(["--backend", &backend, "--seed", "7", "--out-dir", &out])
            .output()
            .unwrap();
        ensure(
            o.status.success(),
            format!(
                "run exited {:?}: {}",
                o.status.code(),
                String::from_utf8_lossy(&o.stderr)
            ),
        )?;
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    dirs.sort();
    ensure(dirs.len() == 2, format!("{} run directories", dirs.len()))?;
    let report = |d: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
        normalize_timestamps(&mut v);
        v
    };
    ensure(
        report(&dirs[0]) == report(&dirs[1]),
        "normalized report.json differs",
    )?;
    let preds = |d: &Path| fs::read(d.join("predictions.csv")).unwrap();
    ensure(
        preds(&dirs[0]) == preds(&dirs[1]),
        "predictions.csv differs",
    )?;
    Ok("report.json equal after normalization, predictions.csv byte-identical".into())
}

fn oracle_equivalence() -> Outcome {
    for (op, check) in common::OP_CHECKS {
        for seed in 0..40 {
            check(seed).map_err(|e| format!("{op} seed {seed}: {e}"))?;
        }
    }
    Ok("9 operations x 40 seeds agree with their oracles".into())
}

fn gradient_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        worst = worst.max(common::logistic_gradient_error(seed, 1e-5));
    }
    ensure(worst < 1e-4, format!("relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:e}"))
}

fn table(rows: usize, cols: &[&str]) -> Dataset {
    let columns = cols
        .iter()
        .enumerate()
        .map(|(j, name)| {
            (
                *name,
                Dtype::Numeric,
                (0..rows)
                    .map(|i| Cell::Numeric((i * (j + 1)) as f64))
                    .collect(),
            )
        })
        .collect();
    Dataset::from_columns("t", columns).unwrap()
}

fn check_suite_fidelity() -> Outcome {
    let raw = table(100, &["a", "b"]);
    ensure(
        !test_data_retention(&table(84, &["a", "b"]), &raw, 0.85).passed,
        "84/100 passed",
    )?;
    ensure(
        test_data_retention(&table(86, &["a", "b"]), &raw, 0.85).passed,
        "86/100 failed",
    )?;

    let twin = read_csv_str("t", "x,x\n1,2\n3,4\n", &ReadOptions::default()).unwrap();
    ensure(
        !test_duplicated_features(&twin).passed,
        "duplicated column name passed",
    )?;
    let repeated = read_csv_str("t", "a,b\n1,2\n3,4\n1,2\n", &ReadOptions::default()).unwrap();
    ensure(
        !test_duplicated_rows(&repeated).passed,
        "duplicated row passed",
    )?;

    let results = run_suite(&raw, &raw, &CheckConfig::default());
    ensure(
        results.len() == 7 && suite_passed(&results),
        format!("clean fixture: {results:?}"),
    )?;
    Ok("retention boundary, duplicate detection and clean pass all hold".into())
}

const CRITERIA: [(u32, &str, fn() -> Outcome, Duration); 9] = [
    (
        1,
        "metric arithmetic",
        metric_arithmetic,
        Duration::from_secs(1),
    ),
    (2, "VS granularity", vs_granularity, Duration::from_secs(1)),
    (3, "NPS bounds", nps_bounds, Duration::from_secs(5)),
    (
        4,
        "repair-loop monotonicity",
        repair_monotonicity,
        Duration::from_secs(30),
    ),
    (
        5,
        "perturbation stability protocol",
        stability_protocol,
        Duration::from_secs(30),
    ),
    (
        6,
        "end-to-end determinism",
        end_to_end_determinism,
        Duration::from_secs(60),
    ),
    (
        7,
        "operation oracle equivalence",
        oracle_equivalence,
        Duration::from_secs(10),
    ),
    (
        8,
        "logistic gradient check",
        gradient_check,
        Duration::from_secs(5),
    ),
    (
        9,
        "check-suite fidelity",
        check_suite_fidelity,
        Duration::from_secs(1),
    ),
];

#[test]
fn acceptance() {
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (id, name, run, budget) in CRITERIA {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        // Budgets are stated for optimized builds; debug builds only report them.
        let slow = if elapsed > budget {
            format!(" (over {budget:?} budget)")
        } else {
            String::new()
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => ("FAIL", e.clone()),
        };
        writeln!(
            out,
            "{tag} criterion {id} ({name}): {detail} [{elapsed:.2?}{slow}]"
        )
        .unwrap();
        if result.is_err() {
            failed.push(id);
        }
    }
    writeln!(
        out,
        "NOT REPRODUCIBLE criterion 10 (multi-dataset benchmark against other agent systems): needs paid \
         frontier-model access and the full dataset suite; scripts/remote_adult.sh runs one remote session"
    )
    .unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
