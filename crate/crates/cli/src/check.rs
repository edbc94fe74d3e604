//! Compact oracle suite behind the `check` subcommand.

use cellfree_apg::objective::{conservative_lipschitz_bound, grad_objective, PenaltyParams};
use cellfree_apg::oracles::{fd_gradient, grid_maximize, grid_project, max_rel_error, GridObjective, OracleReport};
use cellfree_apg::problem::{se_per_user_eta, se_per_user_theta, theta_to_eta};
use cellfree_apg::projection::project;
use cellfree_apg::solver::solve;
use cellfree_apg::{FeasibleSetSpec, PowerModel, ProblemData, Scenario, ScenarioConfig, SolverConfig, ThetaVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliResult;

fn instance(
    m: usize,
    k: usize,
    n: usize,
    tau_p: usize,
    se: f64,
    seed: u64,
    side_km: f64,
) -> CliResult<(Scenario, ProblemData)> {
    let cfg = ScenarioConfig {
        num_aps: m,
        num_users: k,
        antennas_per_ap: n,
        tau_p,
        seed,
        area_side_km: side_km,
        ..Default::default()
    };
    let sc = Scenario::generate(&cfg)?;
    let pd = ProblemData::precompute(&sc, &PowerModel::default(), &vec![se; k])?;
    Ok((sc, pd))
}

fn random_point(m: usize, k: usize, n: usize, rng: &mut ChaCha8Rng) -> ThetaVector {
    let raw: Vec<f64> = (0..m * k).map(|_| rng.gen_range(0.01..1.0)).collect();
    project(&raw, &FeasibleSetSpec::new(m, k, n))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Runs every oracle comparison once and returns one report per quantity.
pub fn run_checks(seed: u64) -> CliResult<Vec<OracleReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();

    let (sc, pd) = instance(8, 4, 1, 2, 1.0, seed, 1.0)?;
    let mut grad_err = 0.0f64;
    let mut se_err = 0.0f64;
    for _ in 0..20 {
        let theta = random_point(8, 4, 1, &mut rng);
        for xi in [0.0, 1.0, 1e3] {
            let g = grad_objective(&theta, &pd, &PenaltyParams::new(xi));
            grad_err = grad_err.max(max_rel_error(&fd_gradient(theta.values(), &pd, xi, 1e-6), &g));
        }
        let eta = theta_to_eta(&theta, &sc.gamma)?;
        for (a, b) in se_per_user_theta(&theta, &pd).iter().zip(se_per_user_eta(&eta, &sc)) {
            se_err = se_err.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
        }
    }
    reports.push(OracleReport::new("gradient vs central differences (max rel err)", 0.0, grad_err, 1e-6, false));
    reports.push(OracleReport::new("SE theta vs eta coordinates (max rel err)", 0.0, se_err, 1e-10, false));

    let spec2 = FeasibleSetSpec::new(1, 2, 1);
    let (mut excess, mut gap) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..100 {
        let u: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let p = project(&u, &spec2);
        let g = grid_project(&u, &spec2, 1e-3)?;
        let (dp, dg) = (dist(p.values(), &u), dist(&g, &u));
        excess = excess.max(dp - dg);
        gap = gap.max((dp - dg).abs());
    }
    reports.push(OracleReport::new(
        "projection distance minus grid distance (max)",
        0.0,
        excess.max(0.0),
        1e-12,
        false,
    ));
    reports.push(OracleReport::new("projection vs grid distance gap", 0.0, gap, 2e-3, false));

    let pp = PenaltyParams::new(1e3);
    let l = conservative_lipschitz_bound(&pd, &pp).total();
    let mut ratio = 0.0f64;
    for _ in 0..200 {
        let (x, y) = (random_point(8, 4, 1, &mut rng), random_point(8, 4, 1, &mut rng));
        let d = dist(x.values(), y.values());
        if d > 0.0 {
            ratio = ratio.max(dist(&grad_objective(&x, &pd, &pp), &grad_objective(&y, &pd, &pp)) / d);
        }
    }
    reports.push(OracleReport::new("sampled gradient Lipschitz ratio / bound", 0.0, ratio / l, 1.0, false));

    let (_, tiny) = instance(2, 1, 2, 1, 1.0, seed, 0.3)?;
    let (_, best) = grid_maximize(&tiny, GridObjective::ConstrainedEe, 2e-3)?;
    let r = solve(&tiny, &SolverConfig::default())?;
    reports.push(OracleReport::new("EE of solve vs grid maximum (M=2, K=1)", best, r.ee, 1e-3, true));
    Ok(reports)
}
