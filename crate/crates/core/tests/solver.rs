mod common;

use cellfree_apg::objective::{eval_objective, PenaltyParams};
use cellfree_apg::oracles::{grid_maximize, GridObjective};
use cellfree_apg::problem::theta_to_eta;
use cellfree_apg::projection::is_feasible;
use cellfree_apg::solver::{
    apg_inner, estimate_variances, solve, solve_with, Branch, IterationRecord, SolveStatus, SolverConfig, StepMode,
    Theta0,
};
use cellfree_apg::{FeasibleSetSpec, ThetaVector};
use common::{problem, problem_in_area, random_feasible};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn assert_monotone(trace: &[IterationRecord]) {
    for w in trace.windows(2) {
        if w[1].outer_iter == w[0].outer_iter {
            assert!(w[1].f_xi >= w[0].f_xi - 1e-12, "descent at outer {} inner {}", w[1].outer_iter, w[1].inner_iter);
        }
    }
}

#[test]
fn small_instance_ends_feasible() {
    for seed in 0..3 {
        let pd = problem(8, 4, 1, 2, 0.3, seed);
        let r = solve(&pd, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.violation_final <= 1e-6);
        let spec = FeasibleSetSpec::new(8, 4, 1);
        assert!(is_feasible(r.theta_opt.values(), &spec, 1e-12).feasible);
        assert!(r.theta_opt.block_sq_norms().iter().all(|s| *s <= 1.0 + 1e-12));
        for se in &r.se_per_user {
            assert!(*se >= 0.3 - 1e-3);
        }
        assert_monotone(&r.trace);
        let eta = theta_to_eta(&r.theta_opt, &estimate_variances(&pd)).unwrap();
        assert_eq!(eta, r.eta_opt);
    }
}

#[test]
fn warm_start_rows_continue_previous_round() {
    let pd = problem(20, 6, 1, 3, 1.0, 0);
    let r = solve(&pd, &SolverConfig::default()).unwrap();
    assert!(r.outer_iters > 1);
    for w in r.trace.windows(2) {
        if w[1].branch == Branch::Start && w[1].outer_iter > 0 {
            let (last, first) = (&w[0], &w[1]);
            assert_eq!(first.outer_iter, last.outer_iter + 1);
            assert_eq!(first.ee_term, last.ee_term);
            assert_eq!(first.penalty_sum, last.penalty_sum);
            assert_eq!(first.f_xi, first.ee_term - first.xi * first.penalty_sum);
            assert!((first.xi / last.xi - 10.0).abs() < 1e-12);
        }
    }
}

#[test]
fn observer_sees_every_row_in_order() {
    let pd = problem(8, 4, 1, 2, 0.3, 4);
    let mut seen = Vec::new();
    let r = solve_with(&pd, &SolverConfig::default(), |row| seen.push(row.clone())).unwrap();
    assert_eq!(seen, r.trace);
}

#[test]
fn deterministic_trace() {
    let pd = problem(20, 6, 1, 3, 1.0, 1);
    let a = solve(&pd, &SolverConfig::default()).unwrap();
    let b = solve(&pd, &SolverConfig::default()).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.theta_opt, b.theta_opt);
}

#[test]
fn easy_targets_need_one_round() {
    let pd = problem(20, 4, 2, 4, 0.01, 2);
    let r = solve(&pd, &SolverConfig::default()).unwrap();
    assert_eq!(r.outer_iters, 1);
    assert_eq!(r.status, SolveStatus::Converged);
}

#[test]
fn penalty_pressure_reduces_violation() {
    let pd = problem(8, 4, 1, 2, 1.0, 5);
    let start = ThetaVector::new(vec![0.05; 32], 4).unwrap();
    let before = eval_objective(&start, &pd, &PenaltyParams::new(0.0));
    assert!(before.violation > 0.0);
    let xi = 1e6 * before.ee_term / before.penalty_sum;
    let (out, trace) = apg_inner(&start, xi, &pd, &SolverConfig::default()).unwrap();
    assert!(out.sample.violation < before.violation);
    assert_monotone(&trace);
}

#[test]
fn fixed_step_mode_is_monotone() {
    let pd = problem(8, 4, 1, 2, 1.0, 6);
    let cfg = SolverConfig { step_mode: StepMode::FixedLipschitz, max_inner: 50, max_outer: 3, ..Default::default() };
    let r = solve(&pd, &cfg).unwrap();
    assert!(r.trace.len() > 20);
    assert_monotone(&r.trace);
}

#[test]
fn scalar_problem_matches_fine_grid() {
    let mut checked = 0;
    for seed in 0..20 {
        let pd = problem_in_area(1, 1, 2, 1, 0.5, seed, 0.3);
        // 1e4-point grid over [0, sqrt(1/2)]
        let Ok((_, best)) = grid_maximize(&pd, GridObjective::ConstrainedEe, (0.5f64).sqrt() / 1e4) else { continue };
        let r = solve(&pd, &SolverConfig::default()).unwrap();
        assert!(((r.ee - best) / best).abs() <= 1e-3, "seed {seed}: {} vs {best}", r.ee);
        checked += 1;
    }
    assert!(checked >= 5, "too few feasible scalar instances: {checked}");
}

#[test]
fn two_ap_problem_matches_grid() {
    for seed in 0..3 {
        let pd = problem_in_area(2, 1, 2, 1, 1.0, seed, 0.3);
        let (_, best) = grid_maximize(&pd, GridObjective::ConstrainedEe, 2e-3).unwrap();
        let r = solve(&pd, &SolverConfig::default()).unwrap();
        assert!(((r.ee - best) / best).abs() <= 1e-3, "seed {seed}: {} vs {best}", r.ee);
    }
}

#[test]
fn random_starts_all_end_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let pd = problem(20, 6, 1, 3, 1.0, 3);
    for _ in 0..3 {
        let start = random_feasible(20, 6, 1, &mut rng, 0.0, 1.0);
        let cfg = SolverConfig { theta0: Theta0::Given(start.into_values()), ..Default::default() };
        let r = solve(&pd, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert_monotone(&r.trace);
    }
}

#[test]
fn wrong_theta0_length_is_rejected() {
    let pd = problem(4, 2, 1, 2, 1.0, 0);
    let cfg = SolverConfig { theta0: Theta0::Given(vec![0.1; 3]), ..Default::default() };
    assert!(solve(&pd, &cfg).is_err());
}
