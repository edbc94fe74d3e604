//! Single runs and sweeps.

use std::path::{Path, PathBuf};

use cellfree_apg::problem::{PowerModel, ProblemData};
use cellfree_apg::scenario::Scenario;
use cellfree_apg::solver::{solve_with, SolverConfig, SolverResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{write_json, write_summary, RunSidecar, SummaryRow, TraceWriter};
use crate::spec::{derive_seed, ExperimentSpec, SweepPoint};

/// Input of the `solve` subcommand, also written by `generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub scenario: Scenario,
    pub power_model: PowerModel,
    pub se_targets: Vec<f64>,
}

/// Solves one scenario, streaming the trace to `trace_path` when given.
pub fn run_single(
    scenario: &Scenario,
    power: &PowerModel,
    se_targets: &[f64],
    solver: &SolverConfig,
    trace_path: Option<&Path>,
) -> CliResult<SolverResult> {
    let pd = ProblemData::precompute(scenario, power, se_targets)?;
    match trace_path {
        Some(path) => {
            let mut sink = TraceWriter::create(path)?;
            let result = solve_with(&pd, solver, |row| sink.push(row))?;
            sink.finish()?;
            Ok(result)
        }
        None => Ok(solve_with(&pd, solver, |_| {})?),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn sidecar(
    point: Option<SweepPoint>,
    realization: usize,
    scenario: &Scenario,
    power: &PowerModel,
    se_targets: &[f64],
    solver: &SolverConfig,
    result: &SolverResult,
    timing: bool,
) -> RunSidecar {
    RunSidecar {
        point,
        realization,
        seed: scenario.config.seed,
        scenario_config: scenario.config.clone(),
        power_model: power.clone(),
        se_targets: se_targets.to_vec(),
        solver_config: solver.clone(),
        status: result.status,
        ee_bit_per_j: result.ee,
        sum_se: result.se_per_user.iter().sum(),
        se_per_user: result.se_per_user.clone(),
        violation_final: result.violation_final,
        relative_violation_final: result.relative_violation_final,
        power_report: result.power_report.clone(),
        xi0: result.xi0,
        xi_final: result.xi_final,
        outer_iters: result.outer_iters,
        inner_iters_total: result.inner_iters_total,
        backtracks_total: result.backtracks_total,
        wall_time_s: if timing { result.wall_time_s } else { 0.0 },
        theta_opt: result.theta_opt.values().to_vec(),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub runs: Vec<RunSidecar>,
    pub summary: Vec<SummaryRow>,
}

pub fn run_dir(output_dir: &Path) -> PathBuf {
    output_dir.join("runs")
}

pub fn trace_file(output_dir: &Path, point: usize, realization: usize) -> PathBuf {
    run_dir(output_dir).join(format!("p{point}_r{realization}_trace.csv"))
}

pub fn sidecar_file(output_dir: &Path, point: usize, realization: usize) -> PathBuf {
    run_dir(output_dir).join(format!("p{point}_r{realization}.json"))
}

/// Runs every (point, realization) pair and writes traces, sidecars and
/// the summary. Runs that end infeasible are reported, not treated as errors.
pub fn run_experiment(spec: &ExperimentSpec) -> CliResult<ExperimentOutcome> {
    spec.validate()?;
    let master = spec.master_seed.expect("validated");
    let points = spec.points()?;
    let out = spec.output_dir.clone();
    let runs_dir = run_dir(&out);
    std::fs::create_dir_all(&runs_dir).map_err(|e| CliError::io(&runs_dir, e))?;

    let jobs: Vec<(SweepPoint, usize)> =
        points.iter().flat_map(|p| (0..spec.realizations).map(move |r| (p.clone(), r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;

    let results: Vec<CliResult<RunSidecar>> = pool.install(|| {
        jobs.par_iter()
            .map(|(point, r)| {
                let seed = derive_seed(master, point.index, *r);
                let scenario = Scenario::generate(&spec.scenario_config(point, seed))?;
                let targets = vec![point.se_target; point.num_users];
                let trace = spec.emit.trace.then(|| trace_file(&out, point.index, *r));
                let result = run_single(&scenario, &spec.power, &targets, &spec.solver, trace.as_deref())?;
                let car = sidecar(
                    Some(point.clone()),
                    *r,
                    &scenario,
                    &spec.power,
                    &targets,
                    &spec.solver,
                    &result,
                    spec.emit.timing,
                );
                write_json(&sidecar_file(&out, point.index, *r), &car)?;
                Ok(car)
            })
            .collect()
    });
    // collect keeps job order, so the first error and the rows are deterministic
    let runs = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let summary: Vec<SummaryRow> = points
        .iter()
        .map(|p| {
            let mine: Vec<&RunSidecar> =
                runs.iter().filter(|r| r.point.as_ref().map(|q| q.index) == Some(p.index)).collect();
            SummaryRow::from_runs(p, &mine)
        })
        .collect();
    if spec.emit.summary {
        write_summary(&out.join("summary.csv"), &summary)?;
    }
    Ok(ExperimentOutcome { output_dir: out, runs, summary })
}
