//! Scenario-driven runner for the `couplings` toolkit.
//!
//! A scenario is a TOML file naming an operator, a potential family, a
//! coupling point `β` and a list of tasks. [`run`] executes the tasks and
//! writes `report.json` plus one CSV per tabular result into the output
//! directory.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod model;
pub mod scenario;
pub mod tasks;

use model::Model;
use rayon::prelude::*;
use scenario::{task_names, Scenario, ScenarioError};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;
use tasks::{run_task, Context, OutputFile};

/// Overrides the output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "COUPLINGS_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "couplings-out";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("scenario cannot be built: {0}")]
    Build(couplings::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Scenario(_) | RunError::Build(_) => 2,
            RunError::Write { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    InvariantFailed,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskReport {
    pub name: String,
    pub kind: &'static str,
    pub status: TaskStatus,
    pub result: serde_json::Value,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariant {
    pub task: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub tasks: usize,
    pub invariants_passed: usize,
    pub invariants_failed: usize,
    pub task_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub tasks: Vec<TaskReport>,
    pub invariants: Vec<Invariant>,
    pub summary: Summary,
}

impl RunReport {
    /// 0 when every invariant held, 1 on an invariant failure, 3 when a
    /// task failed numerically.
    pub fn exit_code(&self) -> u8 {
        if self.summary.task_errors > 0 {
            3
        } else if self.summary.invariants_failed > 0 {
            1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// Record wall-clock seconds per task. Off by default so reports are
    /// byte-identical across runs.
    pub timings: bool,
}

pub fn out_dir(opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Runs every task of the scenario and writes the outputs.
pub fn run(s: &Scenario, opts: &RunOptions) -> Result<(RunReport, PathBuf), RunError> {
    let names = task_names(&s.tasks)?;
    let model = Model::build(s).map_err(RunError::Build)?;
    let outcomes: Vec<(TaskReport, Vec<tasks::Check>, Vec<OutputFile>)> = s
        .tasks
        .par_iter()
        .zip(names.par_iter())
        .map(|(task, name)| {
            let cx = Context {
                model: &model,
                seed: s.seed,
                tolerance: s.tolerance,
                name,
            };
            let start = Instant::now();
            let outcome = run_task(task, &cx);
            let seconds = opts.timings.then(|| start.elapsed().as_secs_f64());
            match outcome {
                Ok(done) => {
                    let status = if done.failure.is_some() {
                        TaskStatus::Error
                    } else if done.checks.iter().all(|c| c.passed) {
                        TaskStatus::Ok
                    } else {
                        TaskStatus::InvariantFailed
                    };
                    let report = TaskReport {
                        name: name.clone(),
                        kind: task.kind(),
                        status,
                        result: done.result,
                        files: done.files.iter().map(|f| f.name.clone()).collect(),
                        error: done.failure,
                        seconds,
                    };
                    (report, done.checks, done.files)
                }
                Err(e) => (
                    TaskReport {
                        name: name.clone(),
                        kind: task.kind(),
                        status: TaskStatus::Error,
                        result: serde_json::Value::Null,
                        files: Vec::new(),
                        error: Some(e.to_string()),
                        seconds,
                    },
                    Vec::new(),
                    Vec::new(),
                ),
            }
        })
        .collect();

    let mut reports = Vec::with_capacity(outcomes.len());
    let mut invariants = Vec::new();
    let mut files = Vec::new();
    for (report, checks, out) in outcomes {
        invariants.extend(checks.into_iter().map(|c| Invariant {
            task: report.name.clone(),
            name: c.name,
            passed: c.passed,
            detail: c.detail,
        }));
        files.extend(out);
        reports.push(report);
    }
    let summary = Summary {
        tasks: reports.len(),
        invariants_passed: invariants.iter().filter(|i| i.passed).count(),
        invariants_failed: invariants.iter().filter(|i| !i.passed).count(),
        task_errors: reports
            .iter()
            .filter(|r| r.status == TaskStatus::Error)
            .count(),
    };
    let report = RunReport {
        provenance: Provenance {
            tool: "couplings",
            version: env!("CARGO_PKG_VERSION"),
            schema_version: couplings::SCHEMA_VERSION,
            scenario: s.name.clone(),
            seed: s.seed,
            tolerance: s.tolerance,
        },
        tasks: reports,
        invariants,
        summary,
    };

    let dir = out_dir(opts);
    std::fs::create_dir_all(&dir).map_err(|source| RunError::Write {
        path: dir.display().to_string(),
        source,
    })?;
    for f in &files {
        write_atomic(&dir.join(&f.name), f.contents.as_bytes())?;
    }
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_atomic(&dir.join(REPORT_FILE), json.as_bytes())?;
    Ok((report, dir))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let err = |source| RunError::Write {
        path: path.display().to_string(),
        source,
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}
