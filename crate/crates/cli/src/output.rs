//! On-disk artifacts: per-iteration trace CSV, per-run JSON sidecar and the
//! sweep summary CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cellfree_apg::problem::PowerModel;
use cellfree_apg::scenario::ScenarioConfig;
use cellfree_apg::solver::{IterationRecord, PowerReport, SolveStatus, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::spec::SweepPoint;

pub const TRACE_HEADER: [&str; 10] = [
    "outer_iter",
    "inner_iter",
    "xi",
    "f_xi",
    "ee_Mbit_per_J",
    "penalty_sum",
    "violation",
    "alpha_y",
    "alpha_theta",
    "branch",
];

/// Streams trace rows to a CSV file as the solver produces them.
pub struct TraceWriter {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
    error: Option<CliError>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(TRACE_HEADER).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), inner, error: None })
    }

    /// Records the first failure and drops later rows; see [`TraceWriter::finish`].
    pub fn push(&mut self, r: &IterationRecord) {
        if self.error.is_some() {
            return;
        }
        let row = [
            r.outer_iter.to_string(),
            r.inner_iter.to_string(),
            r.xi.to_string(),
            r.f_xi.to_string(),
            (r.ee_term / 1e6).to_string(),
            r.penalty_sum.to_string(),
            r.violation.to_string(),
            r.alpha_y.to_string(),
            r.alpha_theta.to_string(),
            r.branch.as_str().to_string(),
        ];
        if let Err(e) = self.inner.write_record(&row) {
            self.error = Some(CliError::io(&self.path, e));
        }
    }

    pub fn finish(mut self) -> CliResult<()> {
        if let Some(e) = self.error {
            return Err(e);
        }
        self.inner.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Everything needed to replay and audit one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSidecar {
    pub point: Option<SweepPoint>,
    pub realization: usize,
    pub seed: u64,
    pub scenario_config: ScenarioConfig,
    pub power_model: PowerModel,
    pub se_targets: Vec<f64>,
    pub solver_config: SolverConfig,
    pub status: SolveStatus,
    pub ee_bit_per_j: f64,
    pub sum_se: f64,
    pub se_per_user: Vec<f64>,
    pub violation_final: f64,
    pub relative_violation_final: f64,
    pub power_report: PowerReport,
    pub xi0: f64,
    pub xi_final: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub backtracks_total: usize,
    pub wall_time_s: f64,
    pub theta_opt: Vec<f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub point: usize,
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas: usize,
    pub tau_c: usize,
    pub tau_p: usize,
    pub se_target: f64,
    pub runs: usize,
    pub mean_ee_Mbit_per_J: f64,
    pub median_ee_Mbit_per_J: f64,
    pub mean_sum_se: f64,
    pub feasibility_rate: f64,
    pub mean_wall_time_s: f64,
    pub mean_inner_iters: f64,
    pub mean_outer_iters: f64,
}

impl SummaryRow {
    /// Aggregates the runs of one sweep point; EE and SE statistics cover
    /// every realization, feasible or not.
    pub fn from_runs(point: &SweepPoint, runs: &[&RunSidecar]) -> Self {
        let count = runs.len().max(1) as f64;
        let mean = |f: &dyn Fn(&RunSidecar) -> f64| runs.iter().map(|r| f(r)).sum::<f64>() / count;
        let mut ee: Vec<f64> = runs.iter().map(|r| r.ee_bit_per_j / 1e6).collect();
        ee.sort_by(f64::total_cmp);
        let median = match ee.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => ee[n / 2],
            n => 0.5 * (ee[n / 2 - 1] + ee[n / 2]),
        };
        Self {
            point: point.index,
            num_aps: point.num_aps,
            num_users: point.num_users,
            antennas: point.antennas,
            tau_c: point.tau_c,
            tau_p: point.tau_p,
            se_target: point.se_target,
            runs: runs.len(),
            mean_ee_Mbit_per_J: mean(&|r| r.ee_bit_per_j / 1e6),
            median_ee_Mbit_per_J: median,
            mean_sum_se: mean(&|r| r.sum_se),
            feasibility_rate: mean(&|r| if r.status == SolveStatus::InfeasibilitySuspected { 0.0 } else { 1.0 }),
            mean_wall_time_s: mean(&|r| r.wall_time_s),
            mean_inner_iters: mean(&|r| r.inner_iters_total as f64),
            mean_outer_iters: mean(&|r| r.outer_iters as f64),
        }
    }
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
