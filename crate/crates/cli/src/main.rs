//! `pcsflow` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 the run (or a
//! requested check) failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pcsflow_core::agents::{
    create_run_dir, render_markdown, run_workflow, write_run_dir, BackendChoice, PlannerBackend,
    RemoteBackend, RemoteConfig, RunConfig, RunReport, Scenario, ScriptedBackend, TaskChoice,
};
use pcsflow_core::datacheck::{self, CheckConfig, CheckResult};
use pcsflow_core::metrics::MetricsInput;
use pcsflow_core::perturb::{self, JudgmentCall};
use pcsflow_core::tabular::{read_csv, write_csv, ReadOptions};

/// Distinguishes "the work failed" (exit 2) from usage errors (exit 1).
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

#[derive(Parser)]
#[command(
    name = "pcsflow",
    version,
    about = "Staged data-science runs with stability audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run define, explore, model and evaluate end to end.
    Run(RunArgs),
    /// Perturb a cleaned dataset over judgment calls and check every variant.
    Audit(AuditArgs),
    /// Compute VS, ANPS and CS from per-run scores.
    Metrics(MetricsArgs),
    /// Re-render report.md from a report.json.
    Report(ReportArgs),
}

/// Flags override the matching fields of `--config`.
#[derive(Args, Default)]
struct RunArgs {
    /// JSON file with RunConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    /// classification, regression or auto.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// `scripted`, `scripted:<scenario.json>` or `remote`.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Name of the environment variable holding the remote credential.
    #[arg(long = "api-key-env")]
    api_key_env: Option<String>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long = "retention-threshold")]
    retention_threshold: Option<f64>,
}

#[derive(Args)]
struct AuditArgs {
    /// Cleaned CSV to perturb.
    #[arg(long)]
    data: PathBuf,
    /// JSON array of judgment calls.
    #[arg(long)]
    calls: PathBuf,
    #[arg(long, default_value_t = perturb::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "out-dir", default_value = "runs")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long = "retention-threshold")]
    retention_threshold: Option<f64>,
}

#[derive(Args)]
struct MetricsArgs {
    /// JSON file: {"nps": [...], "tally": {"successes": s, "attempts": t}}.
    input: PathBuf,
    /// Fail unless |CS - value| <= 0.001.
    #[arg(long = "check-against")]
    check_against: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// report.json, or a run directory containing one.
    path: PathBuf,
    /// Output path; defaults to report.md next to the input.
    #[arg(long)]
    output: Option<PathBuf>,
}

const CS_TOLERANCE: f64 = 1e-3;

fn parse_task(s: &str) -> Result<TaskChoice> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| anyhow!("unknown task `{s}` (expected classification, regression or auto)"))
}

fn resolve_config(a: &RunArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! over {
        ($($field:ident),*) => { $( if let Some(v) = &a.$field { c.$field = v.clone().into(); } )* };
    }
    over!(data, test, target, endpoint, model, api_key_env);
    if let Some(t) = &a.task {
        c.task = parse_task(t)?;
    }
    if let Some(v) = a.k {
        c.k = v;
    }
    if let Some(v) = a.n_max {
        c.n_max = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = &a.backend {
        c.backend = v.clone();
    }
    if let Some(v) = &a.out_dir {
        c.out_dir = v.clone();
    }
    if let Some(v) = a.jobs {
        c.jobs = v;
    }
    if let Some(v) = a.retention_threshold {
        c.checks.retention_threshold = v;
    }
    c.validate()?;
    let data = c
        .data
        .as_ref()
        .ok_or_else(|| anyhow!("--data is required"))?;
    for p in std::iter::once(data).chain(c.test.as_ref()) {
        if !p.is_file() {
            bail!("cannot read {}", p.display());
        }
    }
    Ok(c)
}

fn make_backend(cfg: &RunConfig, run_dir: &Path) -> Result<Box<dyn PlannerBackend>> {
    Ok(match cfg.backend_choice()? {
        BackendChoice::Scripted(None) => Box::new(ScriptedBackend::new(Scenario::default())),
        BackendChoice::Scripted(Some(path)) => {
            Box::new(ScriptedBackend::new(Scenario::load(&path)?))
        }
        BackendChoice::Remote {
            endpoint,
            model,
            api_key_env,
        } => {
            let mut rc = RemoteConfig::from_env(&endpoint, &model, &api_key_env)?;
            rc.log_path = Some(run_dir.join("traces").join("backend.jsonl"));
            Box::new(RemoteBackend::new(rc))
        }
    })
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let cfg = resolve_config(a)?;
    // Backend problems (missing credential, bad scenario) surface before any
    // output is created.
    if let BackendChoice::Remote { api_key_env, .. } = cfg.backend_choice()? {
        if std::env::var(&api_key_env).map_or(true, |v| v.is_empty()) {
            bail!("environment variable {api_key_env} is not set");
        }
    }
    if let BackendChoice::Scripted(Some(p)) = cfg.backend_choice()? {
        Scenario::load(&p)?;
    }
    let dir = create_run_dir(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    fs::create_dir_all(dir.join("traces"))?;
    let mut backend = make_backend(&cfg, &dir)?;
    let out = match run_workflow(&cfg, backend.as_mut()) {
        Ok(o) => o,
        Err(e) => {
            let _ = fs::remove_dir_all(&dir);
            return Err(e.into());
        }
    };
    write_run_dir(&dir, &out).with_context(|| format!("cannot write {}", dir.display()))?;
    println!("run directory: {}", dir.display());
    match (&out.report.failure, &out.report.evaluation) {
        (Some(f), _) => return Err(Failed(format!("stage {} failed: {}", f.stage, f.cause)).into()),
        (None, Some(ev)) => match ev.nps {
            Some(n) => println!(
                "complete: {} on {}, test NPS {n:.4}",
                ev.model_id, ev.dataset_id
            ),
            None => println!(
                "complete: {} on {} (test labels unavailable)",
                ev.model_id, ev.dataset_id
            ),
        },
        (None, None) => println!("complete"),
    }
    Ok(())
}

#[derive(Serialize)]
struct AuditSummary {
    specs: Vec<perturb::PerturbationSpec>,
    validation: std::collections::BTreeMap<String, Vec<CheckResult>>,
    valid: Vec<String>,
    excluded: Vec<(String, String)>,
}

fn cmd_audit(a: &AuditArgs) -> Result<()> {
    let checks = match a.retention_threshold {
        Some(t) => CheckConfig::default().with_threshold(t)?,
        None => CheckConfig::default(),
    };
    let raw = read_csv(&a.data, &ReadOptions::default())
        .with_context(|| format!("cannot read {}", a.data.display()))?;
    let text = fs::read_to_string(&a.calls)
        .with_context(|| format!("cannot read {}", a.calls.display()))?;
    let calls: Vec<JudgmentCall> = serde_json::from_str(&text)
        .with_context(|| format!("malformed judgment calls in {}", a.calls.display()))?;
    let specs = perturb::enumerate_specs(&calls, a.k, a.seed)?;

    let dir = create_run_dir(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    fs::create_dir_all(dir.join("datasets"))?;
    let mut excluded = Vec::new();
    let mut built = Vec::new();
    for (spec, m) in specs
        .iter()
        .zip(perturb::materialize_all(&raw, &specs, &calls, a.jobs))
    {
        match m {
            Ok(d) => built.push(d),
            Err(e) => excluded.push((spec.id.clone(), e.to_string())),
        }
    }
    let validation = perturb::validate_all(&built, &raw, &checks);
    let mut valid = Vec::new();
    for d in &built {
        write_csv(d, &dir.join("datasets").join(format!("{}.csv", d.id())))?;
        let results = &validation[d.id()];
        if datacheck::suite_passed(results) {
            valid.push(d.id().to_string());
        } else {
            excluded.push((
                d.id().to_string(),
                datacheck::failure_summary(results).join("; "),
            ));
        }
    }
    excluded.sort();
    for d in &built {
        let status = if valid.iter().any(|v| v == d.id()) {
            "pass"
        } else {
            "FAIL"
        };
        println!(
            "{} {status} ({} rows, {} columns)",
            d.id(),
            d.n_rows(),
            d.n_cols()
        );
    }
    for (id, why) in &excluded {
        println!("excluded {id}: {why}");
    }
    println!(
        "{} of {} datasets valid; written to {}",
        valid.len(),
        specs.len(),
        dir.display()
    );
    let summary = AuditSummary {
        specs,
        validation,
        valid,
        excluded,
    };
    fs::write(
        dir.join("audit.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    if summary.valid.is_empty() {
        return Err(Failed("no perturbed dataset passed the checks".into()).into());
    }
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input)
        .with_context(|| format!("cannot read {}", a.input.display()))?;
    let s = MetricsInput::parse(&text)?.summarize()?;
    println!("VS   {:.4}", s.vs);
    println!("ANPS {:.4} ± {:.4} (n = {})", s.anps, s.sd, s.n_runs);
    println!("CS   {:.4}", s.cs);
    if let Some(v) = a.check_against {
        let diff = (s.cs - v).abs();
        if diff > CS_TOLERANCE {
            return Err(Failed(format!("CS {:.4} differs from {v} by {diff:.4}", s.cs)).into());
        }
        println!("matches {v} within {CS_TOLERANCE}");
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let input = if a.path.is_dir() {
        a.path.join("report.json")
    } else {
        a.path.clone()
    };
    let text =
        fs::read_to_string(&input).with_context(|| format!("cannot read {}", input.display()))?;
    let report: RunReport = serde_json::from_str(&text)
        .with_context(|| format!("malformed report {}", input.display()))?;
    let output = a
        .output
        .clone()
        .unwrap_or_else(|| input.with_file_name("report.md"));
    fs::write(&output, render_markdown(&report))
        .with_context(|| format!("cannot write {}", output.display()))?;
    println!("{}", output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Failed>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
