//! `ecs-lab`: runs a scenario file and writes a verification report.
//!
//! Exit codes: 0 all checks pass, 1 some check fails, 2 the scenario does not
//! parse or violates a precondition, 3 runtime failure.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use ecs_core::io::Scenario;
use ecs_core::report::{Environment, TaskReport};
use ecs_core::suites::run_task;
use ecs_core::{LabError, VerificationReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

const TOL_SCALE_VAR: &str = "ECS_LAB_TOL_SCALE";

#[derive(Debug, Parser)]
#[command(name = "ecs-lab", version, about = "Verification runner for rank-one ECS model manifolds")]
struct Args {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Where to write the JSON report; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for CSV tables of checks and task data.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Number of tasks run concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    parallel: u16,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{context}: {source}")]
    Lab { context: String, source: LabError },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Lab { source, .. } if source.is_precondition() => 2,
            CliError::Lab { .. } | CliError::Runtime(_) => 3,
        }
    }
}

fn tol_scale() -> Result<f64, CliError> {
    match std::env::var(TOL_SCALE_VAR) {
        Err(_) => Ok(1.0),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
            _ => Err(CliError::Input(format!("{TOL_SCALE_VAR} = {s:?} is not a positive number"))),
        },
    }
}

/// Runs every task with its own RNG stream so results do not depend on the
/// degree of parallelism.
fn run_tasks(scenario: &Scenario, seed: u64, threads: usize) -> Result<Vec<TaskReport>, CliError> {
    let model = scenario.model.build().map_err(|e| CliError::Lab { context: "model".into(), source: e })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        scenario
            .tasks
            .par_iter()
            .enumerate()
            .map(|(i, task)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                run_task(&model, task, &mut rng)
                    .map_err(|e| CliError::Lab { context: format!("task {} ({})", i, task.name()), source: e })
            })
            .collect()
    });
    results.into_iter().collect()
}

fn write_csv(dir: &Path, report: &VerificationReport) -> Result<(), Box<dyn std::error::Error>> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("checks.csv"))?;
    w.write_record(["task", "name", "paper_anchor", "residual", "tolerance", "pass"])?;
    for (task, c) in report.checks() {
        w.write_record([
            task,
            &c.name,
            &c.paper_anchor,
            &format!("{:e}", c.residual),
            &format!("{:e}", c.tolerance),
            &c.pass.to_string(),
        ])?;
    }
    w.flush()?;
    for (i, t) in report.tasks.iter().enumerate() {
        let Some(data) = &t.data else { continue };
        let (Some(cols), Some(rows)) = (data["columns"].as_array(), data["rows"].as_array()) else { continue };
        let mut w = csv::Writer::from_path(dir.join(format!("{i:02}_{}.csv", t.task)))?;
        w.write_record(cols.iter().map(|c| c.as_str().unwrap_or_default()))?;
        for row in rows {
            let cells: Vec<String> = row.as_array().into_iter().flatten().map(|x| x.to_string()).collect();
            w.write_record(&cells)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn run(args: &Args) -> Result<VerificationReport, CliError> {
    let scale = tol_scale()?;
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.scenario.display())))?;
    let scenario = Scenario::from_json(&text).map_err(|e| CliError::Lab { context: "scenario".into(), source: e })?;
    let seed = args.seed.or(scenario.seed).unwrap_or(0);
    let threads = usize::from(args.parallel);

    let tasks = run_tasks(&scenario, seed, threads)?;
    let mut report = VerificationReport::new(seed, tasks, Environment::current(scale, threads));
    report.apply_tolerances(&scenario.tolerances, scale);

    let known: BTreeSet<&str> = report.checks().map(|(_, c)| c.name.as_str()).collect();
    for name in scenario.tolerances.keys().filter(|k| !known.contains(k.as_str())) {
        eprintln!("warning: tolerance override {name:?} matches no check");
    }

    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(format!("report: {e}")))?;
    match &args.report {
        Some(path) => fs::write(path, json + "\n")
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{json}"),
    }
    if let Some(dir) = &args.csv {
        write_csv(dir, &report).map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(report) => {
            for (task, c) in report.checks().filter(|(_, c)| !c.pass) {
                eprintln!("FAIL {task}/{}: residual {:e} > tolerance {:e} ({})", c.name, c.residual, c.tolerance, c.paper_anchor);
            }
            let s = report.summary;
            eprintln!("{} tasks, {} checks: {} passed, {} failed", s.tasks, s.checks, s.passed, s.failed);
            ExitCode::from(if report.all_pass() { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
