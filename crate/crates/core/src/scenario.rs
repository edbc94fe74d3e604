//! Network realizations: node placement, three-slope path loss with
//! log-normal shadowing, pilot assignment and MMSE estimation quality.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Reference noise temperature (K).
pub const NOISE_TEMPERATURE_K: f64 = 290.0;

/// The generator used for every scenario. ChaCha8 gives the same stream on
/// every platform for a given seed.
pub type ScenarioRng = ChaCha8Rng;

/// A planar point in kilometres.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas_per_ap: usize,
    pub area_side_km: f64,
    pub d0_km: f64,
    pub d1_km: f64,
    pub path_loss_db: f64,
    pub shadowing_std_db: f64,
    pub tau_c: usize,
    pub tau_p: usize,
    pub bandwidth_hz: f64,
    pub p_down_w: f64,
    pub p_pilot_w: f64,
    pub noise_figure_db: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_aps: 100,
            num_users: 40,
            antennas_per_ap: 1,
            area_side_km: 1.0,
            d0_km: 0.01,
            d1_km: 0.05,
            path_loss_db: 140.7,
            shadowing_std_db: 8.0,
            tau_c: 200,
            tau_p: 40,
            bandwidth_hz: 20e6,
            p_down_w: 1.0,
            p_pilot_w: 0.2,
            noise_figure_db: 9.0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.num_aps == 0 || self.num_users == 0 || self.antennas_per_ap == 0 {
            return bad("num_aps, num_users and antennas_per_ap must be at least 1");
        }
        if self.tau_p == 0 || self.tau_p >= self.tau_c {
            return bad("pilot length must satisfy 1 <= tau_p < tau_c");
        }
        if !(self.d0_km > 0.0 && self.d0_km < self.d1_km && self.d1_km < self.area_side_km) {
            return bad("breakpoints must satisfy 0 < d0 < d1 < area side");
        }
        if !(self.bandwidth_hz > 0.0 && self.p_down_w > 0.0 && self.p_pilot_w > 0.0) {
            return bad("bandwidth and powers must be strictly positive");
        }
        if !(self.shadowing_std_db >= 0.0) || !self.noise_figure_db.is_finite() {
            return bad("shadowing std must be nonnegative and noise figure finite");
        }
        Ok(())
    }

    pub fn noise_power_w(&self) -> f64 {
        noise_power_w(self.bandwidth_hz, self.noise_figure_db)
    }
}

/// A realized network: geometry plus the large-scale statistics the
/// optimizer consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub ap_xy: Vec<Point>,
    pub user_xy: Vec<Point>,
    /// Large-scale fading, APs by users, linear.
    pub beta: Matrix,
    /// Mean-square of the channel estimate, APs by users, linear.
    pub gamma: Matrix,
    pub pilot_of: Vec<usize>,
    /// Normalized downlink SNR (transmit power over noise power).
    pub rho_d: f64,
    /// Normalized pilot SNR.
    pub rho_p: f64,
}

impl Scenario {
    /// Generates a realization from `config.seed`.
    pub fn generate(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ScenarioRng::seed_from_u64(config.seed);
        let (ap_xy, user_xy) = place_nodes(config, &mut rng);
        let distances = Matrix::from_fn(config.num_aps, config.num_users, |m, k| {
            wrapped_distance(ap_xy[m], user_xy[k], config.area_side_km)
        });
        let beta = compute_beta(config, &distances, &mut rng);
        let pilot_of = assign_pilots(config.num_users, config.tau_p, &mut rng);
        let noise = config.noise_power_w();
        let rho_d = config.p_down_w / noise;
        let rho_p = config.p_pilot_w / noise;
        let gamma = compute_gamma(config.tau_p, rho_p, &beta, &pilot_of);
        Ok(Self { config: config.clone(), ap_xy, user_xy, beta, gamma, pilot_of, rho_d, rho_p })
    }

    /// Builds a scenario from externally supplied statistics, recomputing
    /// `gamma` from `beta` and the pilot map.
    pub fn from_beta(config: &ScenarioConfig, beta: Matrix, pilot_of: Vec<usize>) -> Result<Self> {
        config.validate()?;
        if beta.rows != config.num_aps || beta.cols != config.num_users {
            return Err(Error::InvalidConfig("beta shape does not match config".into()));
        }
        if pilot_of.len() != config.num_users || pilot_of.iter().any(|&p| p >= config.tau_p) {
            return Err(Error::InvalidConfig("pilot map must hold one index < tau_p per user".into()));
        }
        if beta.data.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::Domain("beta must be strictly positive and finite".into()));
        }
        let noise = config.noise_power_w();
        let rho_d = config.p_down_w / noise;
        let rho_p = config.p_pilot_w / noise;
        let gamma = compute_gamma(config.tau_p, rho_p, &beta, &pilot_of);
        Ok(Self { config: config.clone(), ap_xy: Vec::new(), user_xy: Vec::new(), beta, gamma, pilot_of, rho_d, rho_p })
    }

    pub fn num_aps(&self) -> usize {
        self.config.num_aps
    }

    pub fn num_users(&self) -> usize {
        self.config.num_users
    }

    /// Whether users `a` and `b` transmit the same pilot.
    pub fn shares_pilot(&self, a: usize, b: usize) -> bool {
        self.pilot_of[a] == self.pilot_of[b]
    }
}

/// Drops `M` APs followed by `K` users uniformly in `[0, D]^2`.
pub fn place_nodes<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> (Vec<Point>, Vec<Point>) {
    let side = config.area_side_km;
    let mut draw =
        |n: usize| -> Vec<Point> { (0..n).map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side]).collect() };
    let aps = draw(config.num_aps);
    let users = draw(config.num_users);
    (aps, users)
}

/// Distance on the torus of side `side`.
pub fn wrapped_distance(a: Point, b: Point, side: f64) -> f64 {
    let axis = |u: f64, v: f64| {
        let d = (u - v).abs();
        d.min(side - d)
    };
    axis(a[0], b[0]).hypot(axis(a[1], b[1]))
}

/// Three-slope path loss in dB for a distance in km.
pub fn path_loss_db(d_km: f64, config: &ScenarioConfig) -> Result<f64> {
    if !(d_km > 0.0) {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {d_km}")));
    }
    let l = config.path_loss_db;
    let (d0, d1) = (config.d0_km, config.d1_km);
    Ok(if d_km > d1 {
        -l - 35.0 * d_km.log10()
    } else if d_km > d0 {
        -l - 15.0 * d1.log10() - 20.0 * d_km.log10()
    } else {
        -l - 15.0 * d1.log10() - 20.0 * d0.log10()
    })
}

/// Large-scale fading with log-normal shadowing on the far (35 dB/decade)
/// branch only. One normal draw is consumed per link regardless of branch
/// so the stream does not depend on geometry.
pub fn compute_beta<R: Rng + ?Sized>(config: &ScenarioConfig, distances: &Matrix, rng: &mut R) -> Matrix {
    let mut beta = Matrix::zeros(distances.rows, distances.cols);
    for (out, &d) in beta.data.iter_mut().zip(&distances.data) {
        let z: f64 = rng.sample(StandardNormal);
        // coincident points fall in the flat innermost branch
        let d = if d > 0.0 { d } else { config.d0_km };
        let pl = path_loss_db(d, config).expect("distance is positive");
        let shadow = if d > config.d1_km { config.shadowing_std_db * z } else { 0.0 };
        *out = 10f64.powf((pl + shadow) / 10.0);
    }
    beta
}

/// Orthogonal pilots when `tau_p >= K`, otherwise balanced reuse over a
/// random user order.
pub fn assign_pilots<R: Rng + ?Sized>(num_users: usize, tau_p: usize, rng: &mut R) -> Vec<usize> {
    if tau_p >= num_users {
        let mut pilots: Vec<usize> = (0..tau_p).collect();
        pilots.shuffle(rng);
        pilots.truncate(num_users);
        pilots
    } else {
        let mut order: Vec<usize> = (0..num_users).collect();
        order.shuffle(rng);
        let mut pilot_of = vec![0; num_users];
        for (slot, &user) in order.iter().enumerate() {
            pilot_of[user] = slot % tau_p;
        }
        pilot_of
    }
}

/// MMSE estimation quality with binary pilot correlation.
pub fn compute_gamma(tau_p: usize, rho_p: f64, beta: &Matrix, pilot_of: &[usize]) -> Matrix {
    let tp = tau_p as f64 * rho_p;
    let (rows, cols) = (beta.rows, beta.cols);
    Matrix::from_fn(rows, cols, |m, k| {
        let contaminated: f64 = (0..cols).filter(|&j| pilot_of[j] == pilot_of[k]).map(|j| beta.get(m, j)).sum();
        let b = beta.get(m, k);
        tp * b * b / (tp * contaminated + 1.0)
    })
}

/// Thermal noise power `k_B T0 B 10^(NF/10)` in watts.
pub fn noise_power_w(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    BOLTZMANN * NOISE_TEMPERATURE_K * bandwidth_hz * 10f64.powf(noise_figure_db / 10.0)
}
