#![allow(dead_code)]

use cellfree_apg::{PowerModel, ProblemData, Scenario, ScenarioConfig, ThetaVector};
use rand::Rng;

pub fn scenario(m: usize, k: usize, n: usize, tau_p: usize, seed: u64) -> Scenario {
    let cfg = ScenarioConfig { num_aps: m, num_users: k, antennas_per_ap: n, tau_p, seed, ..Default::default() };
    Scenario::generate(&cfg).unwrap()
}

pub fn problem(m: usize, k: usize, n: usize, tau_p: usize, se: f64, seed: u64) -> ProblemData {
    ProblemData::precompute(&scenario(m, k, n, tau_p, seed), &PowerModel::default(), &vec![se; k]).unwrap()
}

pub fn problem_in_area(m: usize, k: usize, n: usize, tau_p: usize, se: f64, seed: u64, side_km: f64) -> ProblemData {
    let cfg = ScenarioConfig {
        num_aps: m,
        num_users: k,
        antennas_per_ap: n,
        tau_p,
        seed,
        area_side_km: side_km,
        ..Default::default()
    };
    ProblemData::precompute(&Scenario::generate(&cfg).unwrap(), &PowerModel::default(), &vec![se; k]).unwrap()
}

/// Random point of the feasible set with every entry at least `floor` and
/// every block norm at most `fill` times the radius.
pub fn random_feasible(m: usize, k: usize, n: usize, rng: &mut impl Rng, floor: f64, fill: f64) -> ThetaVector {
    let r = (1.0 / n as f64).sqrt();
    let mut v = Vec::with_capacity(m * k);
    for _ in 0..m {
        let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.05).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = fill * r * rng.gen_range(0.2..1.0) / norm;
        v.extend(raw.iter().map(|x| (x * scale).max(floor)));
    }
    ThetaVector::new(v, k).unwrap()
}

/// Pilot lengths covering shared and orthogonal pilots.
pub const MIXED_TAU_P: [usize; 5] = [2, 3, 4, 2, 3];
