use clap::{Args, Parser, Subcommand};
use couplings_cli::scenario::{self, PathSpec, Scenario, TaskSpec};
use couplings_cli::{run, RunOptions, TaskStatus};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "couplings", version)]
#[command(about = "Run scenario files for Schrödinger operators with many coupling parameters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every task of a scenario.
    Run(Common),
    /// Run only the sweep tasks, optionally replacing their path.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Coupling index to vary.
        #[arg(long, conflicts_with = "direction")]
        axis: Option<usize>,
        /// Comma-separated direction t in coupling space.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run only the analyticity checks (a default check when none is listed).
    Verify(Common),
    /// Print an annotated reference scenario.
    ShowSchema,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; falls back to $COUPLINGS_OUT_DIR, then ./couplings-out.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Invariant tolerance, replacing the scenario's `tolerance`.
    #[arg(long)]
    tol: Option<f64>,
    /// `key.path=value`, applied to the scenario before validation.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Record per-task wall-clock time in the report.
    #[arg(long)]
    timings: bool,
}

fn load(common: &Common) -> Result<Scenario, ExitCode> {
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(tol) = common.tol {
        overrides.push(format!("tolerance={tol:e}"));
    }
    scenario::load(&common.scenario, &overrides).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn execute(common: &Common, s: &Scenario) -> ExitCode {
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions {
        out_dir: common.out.clone(),
        timings: common.timings,
    };
    let (report, dir) = match run(s, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    for t in &report.tasks {
        let status = match t.status {
            TaskStatus::Ok => "ok",
            TaskStatus::InvariantFailed => "INVARIANT FAILED",
            TaskStatus::Error => "ERROR",
        };
        println!("{:<16} {:<9} {status}", t.name, t.kind);
        if let Some(e) = &t.error {
            println!("    {e}");
        }
    }
    for i in report.invariants.iter().filter(|i| !i.passed) {
        println!("  violated {}/{}: {}", i.task, i.name, i.detail);
    }
    println!(
        "{} invariants passed, {} failed, {} task errors; report in {}",
        report.summary.invariants_passed,
        report.summary.invariants_failed,
        report.summary.task_errors,
        dir.display()
    );
    ExitCode::from(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ShowSchema => {
            print!("{}", scenario::SCHEMA_TEXT);
            ExitCode::SUCCESS
        }
        Command::Run(common) => match load(&common) {
            Ok(s) => execute(&common, &s),
            Err(code) => code,
        },
        Command::Verify(common) => match load(&common) {
            Ok(mut s) => {
                s.tasks.retain(|t| matches!(t, TaskSpec::Verify { .. }));
                if s.tasks.is_empty() {
                    s.tasks.push(TaskSpec::Verify {
                        name: None,
                        directions: 3,
                        vectors: 2,
                        radius: 0.25,
                    });
                }
                execute(&common, &s)
            }
            Err(code) => code,
        },
        Command::Sweep {
            common,
            axis,
            direction,
            from,
            to,
            steps,
        } => match load(&common) {
            Ok(mut s) => {
                s.tasks.retain(|t| matches!(t, TaskSpec::Sweep(_)));
                if s.tasks.is_empty() {
                    let (Some(to), Some(steps)) = (to, steps) else {
                        eprintln!("error: the scenario has no sweep task; give --to and --steps");
                        return ExitCode::from(2);
                    };
                    s.tasks.push(TaskSpec::Sweep(PathSpec {
                        name: None,
                        axis,
                        direction: direction.clone(),
                        from: from.unwrap_or(0.0),
                        to,
                        steps,
                        start: couplings::analytic::TrackStart::Level(0),
                        nodes: 64,
                        dense_checks: 0,
                        monotone: None,
                    }));
                } else {
                    for t in &mut s.tasks {
                        if let TaskSpec::Sweep(p) = t {
                            if axis.is_some() || direction.is_some() {
                                p.axis = axis;
                                p.direction = direction.clone();
                            }
                            p.from = from.unwrap_or(p.from);
                            p.to = to.unwrap_or(p.to);
                            p.steps = steps.unwrap_or(p.steps);
                        }
                    }
                }
                if let Some(p) = s.tasks.iter().find_map(|t| match t {
                    TaskSpec::Sweep(p) => Some(p),
                    _ => None,
                }) {
                    if p.steps == 0 || (p.steps == 1 && p.from != p.to) {
                        eprintln!("error: a sweep over a nonzero range needs --steps ≥ 2");
                        return ExitCode::from(2);
                    }
                }
                execute(&common, &s)
            }
            Err(code) => code,
        },
    }
}
