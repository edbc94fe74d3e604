//! Coefficient precomputation for the `theta`-parameterized problem and the
//! SE / power / EE evaluations in both `eta` and `theta` coordinates.
//!
//! The variable `theta_mk = sqrt(eta_mk * gamma_mk)` is stored per-AP
//! contiguous at index `m * K + k`. The selection operators that pick the
//! user-`k` column out of `theta` are never materialized; everything is
//! expressed through two families of scalars:
//!
//! - `c[k', k] = tilde_gamma[k', k] . theta[:, k']`, stored only for pilot
//!   sharing pairs (always including `k' == k`);
//! - `W[k] = sum_m beta[m, k] * ||theta_m||^2`, the sum over `k'` of the
//!   beamforming-uncertainty terms seen by user `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scenario::Scenario;

/// The optimization variable, stacked per AP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    num_users: usize,
    values: Vec<f64>,
}

impl ThetaVector {
    pub fn new(values: Vec<f64>, num_users: usize) -> Result<Self> {
        if num_users == 0 || values.is_empty() || !values.len().is_multiple_of(num_users) {
            return Err(Error::InvalidConfig(format!(
                "theta length {} is not a positive multiple of K = {num_users}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain(format!("theta entries must be nonnegative, found {v}")));
        }
        Ok(Self { num_users, values })
    }

    /// Wraps values produced by a projection; they are nonnegative by
    /// construction.
    pub(crate) fn from_projected(values: Vec<f64>, num_users: usize) -> Self {
        debug_assert!(values.iter().all(|v| *v >= 0.0));
        Self { num_users, values }
    }

    /// Extrapolated point of the momentum step; may leave the orthant.
    pub(crate) fn extrapolated(values: Vec<f64>, num_users: usize) -> Self {
        Self { num_users, values }
    }

    pub fn zeros(num_aps: usize, num_users: usize) -> Self {
        Self { num_users, values: vec![0.0; num_aps * num_users] }
    }

    /// Every AP transmits at full power split evenly over users:
    /// `theta_mk = sqrt(1 / (N K))`.
    pub fn uniform_full_power(num_aps: usize, num_users: usize, antennas: usize) -> Self {
        let v = (1.0 / (antennas * num_users) as f64).sqrt();
        Self { num_users, values: vec![v; num_aps * num_users] }
    }

    #[inline]
    pub fn index(&self, ap: usize, user: usize) -> usize {
        ap * self.num_users + user
    }

    #[inline]
    pub fn get(&self, ap: usize, user: usize) -> f64 {
        self.values[ap * self.num_users + user]
    }

    pub fn num_aps(&self) -> usize {
        self.values.len() / self.num_users
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, ap: usize) -> &[f64] {
        &self.values[ap * self.num_users..(ap + 1) * self.num_users]
    }

    /// `||theta_m||^2` for every AP.
    pub fn block_sq_norms(&self) -> Vec<f64> {
        self.values.chunks_exact(self.num_users).map(|b| b.iter().map(|x| x * x).sum()).collect()
    }
}

/// Power consumption parameters shared by all APs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    /// Power amplifier efficiency in (0, 1].
    pub amplifier_efficiency: f64,
    /// Circuit power per antenna (W).
    pub circuit_power_per_antenna_w: f64,
    /// Fixed backhaul power per AP (W).
    pub backhaul_fixed_w: f64,
    /// Traffic-dependent backhaul power (W per bit/s).
    pub backhaul_traffic_w_per_bps: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            amplifier_efficiency: 0.4,
            circuit_power_per_antenna_w: 0.2,
            backhaul_fixed_w: 0.825,
            backhaul_traffic_w_per_bps: 0.25e-9,
        }
    }
}

/// `tilde_gamma[interferer, user]`, the coefficient vector over APs coupling
/// the column of `interferer` into the coherent term of `user`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotPair {
    pub interferer: usize,
    pub user: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemData {
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas: usize,
    pub tau_c: usize,
    pub tau_p: usize,
    pub bandwidth_hz: f64,
    pub rho_d: f64,
    /// Sparse `tilde_gamma`, grouped by `user` in ascending order.
    pub pairs: Vec<PilotPair>,
    /// Range of `pairs` belonging to each user.
    pub pair_range: Vec<(usize, usize)>,
    /// Index into `pairs` of the `(k, k)` entry.
    pub self_pair: Vec<usize>,
    /// `sqrt(beta)`, APs by users.
    pub tilde_kappa: Matrix,
    /// Diagonals of the `B_k` matrices, APs by users.
    pub beta: Matrix,
    /// QoS thresholds `a_k`.
    pub qos_threshold: Vec<f64>,
    pub se_targets: Vec<f64>,
    pub amplifier_efficiency: Vec<f64>,
    pub circuit_power_w: Vec<f64>,
    pub backhaul_fixed_w: Vec<f64>,
    pub backhaul_traffic_w_per_bps: Vec<f64>,
    pub noise_w: f64,
    /// `sum_m (N P_tc,m + P_0,m)`.
    pub p_fix: f64,
}

impl ProblemData {
    pub fn precompute(scenario: &Scenario, power: &PowerModel, se_targets: &[f64]) -> Result<Self> {
        let cfg = &scenario.config;
        let (m_aps, k_users) = (scenario.num_aps(), scenario.num_users());
        if cfg.tau_p >= cfg.tau_c {
            return Err(Error::InvalidConfig("tau_p must be smaller than tau_c".into()));
        }
        if se_targets.len() != k_users || se_targets.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig(format!("need {k_users} positive SE targets")));
        }
        if !(power.amplifier_efficiency > 0.0 && power.amplifier_efficiency <= 1.0) {
            return Err(Error::InvalidConfig("amplifier efficiency must lie in (0, 1]".into()));
        }
        if power.circuit_power_per_antenna_w < 0.0
            || power.backhaul_fixed_w < 0.0
            || power.backhaul_traffic_w_per_bps < 0.0
        {
            return Err(Error::InvalidConfig("power model terms must be nonnegative".into()));
        }
        let n = cfg.antennas_per_ap as f64;
        let (beta, gamma) = (&scenario.beta, &scenario.gamma);

        let mut pairs = Vec::new();
        let mut pair_range = Vec::with_capacity(k_users);
        let mut self_pair = vec![0; k_users];
        for k in 0..k_users {
            let start = pairs.len();
            for kp in (0..k_users).filter(|&kp| scenario.shares_pilot(kp, k)) {
                if kp == k {
                    self_pair[k] = pairs.len();
                }
                let coeffs = (0..m_aps).map(|m| gamma.get(m, kp).sqrt() * beta.get(m, k) / beta.get(m, kp)).collect();
                pairs.push(PilotPair { interferer: kp, user: k, coeffs });
            }
            pair_range.push((start, pairs.len()));
        }

        let prelog_inv = cfg.tau_c as f64 / (cfg.tau_c - cfg.tau_p) as f64;
        let qos_threshold =
            se_targets.iter().map(|s| ((2f64.powf(s * prelog_inv) - 1.0) / (scenario.rho_d * n * n)).sqrt()).collect();

        let circuit = power.circuit_power_per_antenna_w;
        let p_fix = m_aps as f64 * (n * circuit + power.backhaul_fixed_w);
        if !(p_fix > 0.0) {
            return Err(Error::InvalidConfig("fixed power consumption must be positive".into()));
        }

        Ok(Self {
            num_aps: m_aps,
            num_users: k_users,
            antennas: cfg.antennas_per_ap,
            tau_c: cfg.tau_c,
            tau_p: cfg.tau_p,
            bandwidth_hz: cfg.bandwidth_hz,
            rho_d: scenario.rho_d,
            pairs,
            pair_range,
            self_pair,
            tilde_kappa: Matrix { rows: m_aps, cols: k_users, data: beta.data.iter().map(|b| b.sqrt()).collect() },
            beta: beta.clone(),
            qos_threshold,
            se_targets: se_targets.to_vec(),
            amplifier_efficiency: vec![power.amplifier_efficiency; m_aps],
            circuit_power_w: vec![circuit; m_aps],
            backhaul_fixed_w: vec![power.backhaul_fixed_w; m_aps],
            backhaul_traffic_w_per_bps: vec![power.backhaul_traffic_w_per_bps; m_aps],
            noise_w: cfg.noise_power_w(),
            p_fix,
        })
    }

    /// Pre-log factor `(tau_c - tau_p) / tau_c`.
    pub fn prelog(&self) -> f64 {
        (self.tau_c - self.tau_p) as f64 / self.tau_c as f64
    }

    pub fn dim(&self) -> usize {
        self.num_aps * self.num_users
    }

    pub fn pairs_of(&self, user: usize) -> &[PilotPair] {
        let (a, b) = self.pair_range[user];
        &self.pairs[a..b]
    }

    /// `rho_d N_0 N`, the factor in front of the radiated-power sum of `v`.
    pub fn transmit_scale(&self) -> f64 {
        self.rho_d * self.noise_w * self.antennas as f64
    }

    fn check_dims(&self, theta: &ThetaVector) {
        assert_eq!(theta.num_users(), self.num_users, "theta user count mismatch");
        assert_eq!(theta.num_aps(), self.num_aps, "theta AP count mismatch");
    }
}

/// Per-evaluation scalars shared by SE, QoS and gradient computations.
#[derive(Debug, Clone)]
pub struct CouplingTerms {
    /// `c[k', k]` in the order of `ProblemData::pairs`.
    pub c: Vec<f64>,
    /// `||theta_m||^2`.
    pub block_sq: Vec<f64>,
    /// `W[k] = sum_m beta_mk ||theta_m||^2`.
    pub w_total: Vec<f64>,
    /// `rho_d N^2 c_kk^2`.
    pub signal: Vec<f64>,
    /// `rho_d N^2 sum_{k' != k} c_{k'k}^2 + rho_d N W_k + 1`.
    pub denom: Vec<f64>,
}

impl CouplingTerms {
    pub fn compute(theta: &ThetaVector, pd: &ProblemData) -> Self {
        pd.check_dims(theta);
        let k_users = pd.num_users;
        let th = theta.values();
        let c: Vec<f64> = pd
            .pairs
            .iter()
            .map(|p| p.coeffs.iter().enumerate().map(|(m, g)| g * th[m * k_users + p.interferer]).sum())
            .collect();
        let block_sq = theta.block_sq_norms();
        let mut w_total = vec![0.0; k_users];
        for (m, s) in block_sq.iter().enumerate() {
            for (w, b) in w_total.iter_mut().zip(pd.beta.row(m)) {
                *w += b * s;
            }
        }
        let n = pd.antennas as f64;
        let rho = pd.rho_d;
        let mut signal = Vec::with_capacity(k_users);
        let mut denom = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let (a, b) = pd.pair_range[k];
            let own = pd.self_pair[k];
            let interference: f64 = (a..b).filter(|&i| i != own).map(|i| c[i] * c[i]).sum();
            signal.push(rho * n * n * c[own] * c[own]);
            denom.push(rho * n * n * interference + rho * n * w_total[k] + 1.0);
        }
        Self { c, block_sq, w_total, signal, denom }
    }

    pub fn se(&self, pd: &ProblemData) -> Vec<f64> {
        let pre = pd.prelog();
        self.signal.iter().zip(&self.denom).map(|(n, d)| pre * (n / d).ln_1p() / std::f64::consts::LN_2).collect()
    }

    /// `v(theta)`, the traffic-independent total power.
    pub fn total_power(&self, pd: &ProblemData) -> f64 {
        let radiated: f64 = self.block_sq.iter().zip(&pd.amplifier_efficiency).map(|(s, a)| s / a).sum();
        pd.p_fix + pd.transmit_scale() * radiated
    }
}

/// `theta_mk = sqrt(eta_mk * gamma_mk)`.
pub fn eta_to_theta(eta: &Matrix, gamma: &Matrix) -> Result<ThetaVector> {
    if eta.rows != gamma.rows || eta.cols != gamma.cols {
        return Err(Error::InvalidConfig("eta and gamma shapes differ".into()));
    }
    if let Some(e) = eta.data.iter().find(|e| !(**e >= 0.0)) {
        return Err(Error::Domain(format!("eta must be nonnegative, found {e}")));
    }
    if let Some(g) = gamma.data.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::Domain(format!("gamma must be nonnegative, found {g}")));
    }
    let values = eta.data.iter().zip(&gamma.data).map(|(e, g)| (e * g).sqrt()).collect();
    ThetaVector::new(values, eta.cols)
}

/// Inverse of [`eta_to_theta`] on the nonnegative orthant.
pub fn theta_to_eta(theta: &ThetaVector, gamma: &Matrix) -> Result<Matrix> {
    if theta.num_aps() != gamma.rows || theta.num_users() != gamma.cols {
        return Err(Error::InvalidConfig("theta and gamma shapes differ".into()));
    }
    if gamma.data.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::Domain("gamma must be strictly positive to recover eta".into()));
    }
    let data = theta.values().iter().zip(&gamma.data).map(|(t, g)| t * t / g).collect();
    Ok(Matrix { rows: gamma.rows, cols: gamma.cols, data })
}

/// Per-user SE (bit/s/Hz) from `theta` via the coupling scalars.
pub fn se_per_user_theta(theta: &ThetaVector, pd: &ProblemData) -> Vec<f64> {
    CouplingTerms::compute(theta, pd).se(pd)
}

/// Per-user SE evaluated directly in `eta` coordinates from the realized
/// `beta`/`gamma`. Shares no code with [`se_per_user_theta`].
pub fn se_per_user_eta(eta: &Matrix, scenario: &Scenario) -> Vec<f64> {
    let cfg = &scenario.config;
    let (m_aps, k_users) = (scenario.num_aps(), scenario.num_users());
    let n = cfg.antennas_per_ap as f64;
    let rho = scenario.rho_d;
    let pre = (cfg.tau_c - cfg.tau_p) as f64 / cfg.tau_c as f64;
    let (beta, gamma) = (&scenario.beta, &scenario.gamma);
    (0..k_users)
        .map(|k| {
            let coherent = |kp: usize| -> f64 {
                (0..m_aps).map(|m| gamma.get(m, kp) * beta.get(m, k) / beta.get(m, kp) * eta.get(m, kp).sqrt()).sum()
            };
            let desired = coherent(k);
            let mut interference = 0.0;
            let mut uncertainty = 0.0;
            for kp in 0..k_users {
                if kp != k && scenario.shares_pilot(kp, k) {
                    interference += coherent(kp).powi(2);
                }
                for m in 0..m_aps {
                    uncertainty += gamma.get(m, kp) * beta.get(m, k) * eta.get(m, kp);
                }
            }
            let sinr = rho * n * n * desired * desired / (rho * n * n * interference + rho * n * uncertainty + 1.0);
            pre * (1.0 + sinr).log2()
        })
        .collect()
}

/// Total consumed power (W). Without traffic this is the optimized
/// denominator `v(theta)`; with traffic the load-dependent backhaul term
/// `B * sum_k u_k * sum_m P_bt,m` is added for reporting.
pub fn total_power_w(theta: &ThetaVector, pd: &ProblemData, include_traffic: bool) -> f64 {
    let terms = CouplingTerms::compute(theta, pd);
    let base = terms.total_power(pd);
    if include_traffic {
        let sum_se: f64 = terms.se(pd).iter().sum();
        base + pd.bandwidth_hz * sum_se * pd.backhaul_traffic_w_per_bps.iter().sum::<f64>()
    } else {
        base
    }
}

/// Total energy efficiency `B sum_k u_k / v` (bit/J).
pub fn energy_efficiency(theta: &ThetaVector, pd: &ProblemData) -> f64 {
    let terms = CouplingTerms::compute(theta, pd);
    pd.bandwidth_hz * terms.se(pd).iter().sum::<f64>() / terms.total_power(pd)
}
