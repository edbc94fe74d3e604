//! Experiment description: a Cartesian sweep over network sizes, pilot
//! lengths and SE targets, run for several random realizations each.

use std::path::{Path, PathBuf};

use cellfree_apg::{PowerModel, ScenarioConfig, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Pilot length of a sweep point: a fixed count or `"K"` for one pilot per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauP {
    Count(usize),
    Symbol(String),
}

impl TauP {
    pub fn resolve(&self, num_users: usize) -> CliResult<usize> {
        match self {
            TauP::Count(n) => Ok(*n),
            TauP::Symbol(s) if s == "K" => Ok(num_users),
            TauP::Symbol(s) => Err(CliError::Usage(format!("tau_p must be a number or \"K\", got {s:?}"))),
        }
    }
}

/// Lists left empty take the value of the base `[scenario]` table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub num_aps: Vec<usize>,
    pub num_users: Vec<usize>,
    pub antennas: Vec<usize>,
    pub tau_c: Vec<usize>,
    pub tau_p: Vec<TauP>,
    /// Per-user SE target (bit/s/Hz), shared by all users.
    pub se_target: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    pub trace: bool,
    pub summary: bool,
    /// When off, every timing field is written as 0 so outputs are byte-stable.
    pub timing: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self { trace: true, summary: true, timing: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub realizations: usize,
    /// Required before running; may come from the command line instead.
    pub master_seed: Option<u64>,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub sweep: Sweep,
    pub scenario: ScenarioConfig,
    pub power: PowerModel,
    pub solver: SolverConfig,
    pub emit: EmitFlags,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            realizations: 1,
            master_seed: None,
            output_dir: PathBuf::from("results"),
            workers: 0,
            sweep: Sweep::default(),
            scenario: ScenarioConfig::default(),
            power: PowerModel::default(),
            solver: SolverConfig::default(),
            emit: EmitFlags::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas: usize,
    pub tau_c: usize,
    pub tau_p: usize,
    pub se_target: f64,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid experiment config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.realizations == 0 {
            return Err(CliError::Usage("realizations must be at least 1".into()));
        }
        if self.master_seed.is_none() {
            return Err(CliError::Usage("a master seed is required (--seed)".into()));
        }
        self.solver.validate()?;
        let points = self.points()?;
        if points.is_empty() {
            return Err(CliError::Usage("the sweep is empty".into()));
        }
        for p in &points {
            self.scenario_config(p, 0).validate()?;
            if !(p.se_target > 0.0 && p.se_target.is_finite()) {
                return Err(CliError::Usage(format!("SE target must be positive, got {}", p.se_target)));
            }
        }
        Ok(())
    }

    /// Sweep points in lexicographic order of (M, K, N, tau_c, tau_p, S_o).
    pub fn points(&self) -> CliResult<Vec<SweepPoint>> {
        let base = &self.scenario;
        let or = |v: &Vec<usize>, d: usize| if v.is_empty() { vec![d] } else { v.clone() };
        let aps = or(&self.sweep.num_aps, base.num_aps);
        let users = or(&self.sweep.num_users, base.num_users);
        let antennas = or(&self.sweep.antennas, base.antennas_per_ap);
        let tau_c = or(&self.sweep.tau_c, base.tau_c);
        let tau_p = if self.sweep.tau_p.is_empty() { vec![TauP::Count(base.tau_p)] } else { self.sweep.tau_p.clone() };
        let targets = if self.sweep.se_target.is_empty() { vec![1.0] } else { self.sweep.se_target.clone() };

        let mut out = Vec::new();
        for &m in &aps {
            for &k in &users {
                for &n in &antennas {
                    for &tc in &tau_c {
                        for tp in &tau_p {
                            let tp = tp.resolve(k)?;
                            for &s in &targets {
                                out.push(SweepPoint {
                                    index: out.len(),
                                    num_aps: m,
                                    num_users: k,
                                    antennas: n,
                                    tau_c: tc,
                                    tau_p: tp,
                                    se_target: s,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn scenario_config(&self, point: &SweepPoint, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            num_aps: point.num_aps,
            num_users: point.num_users,
            antennas_per_ap: point.antennas,
            tau_c: point.tau_c,
            tau_p: point.tau_p,
            seed,
            ..self.scenario.clone()
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scenario seed of one run, a hash of the master seed and both indices.
pub fn derive_seed(master: u64, point: usize, realization: usize) -> u64 {
    mix(mix(mix(master) ^ point as u64) ^ realization as u64)
}
