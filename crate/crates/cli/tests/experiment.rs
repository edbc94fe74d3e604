use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use cellfree_apg::problem::energy_efficiency;
use cellfree_apg::{ProblemData, Scenario, ThetaVector};
use cellfree_cli::output::{read_json, RunSidecar};
use cellfree_cli::run::{sidecar_file, trace_file};
use cellfree_cli::{run_experiment, ExperimentSpec};

const SMALL: &str = r#"
realizations = 3
workers = 2

[sweep]
num_aps = [8]
num_users = [4]
antennas = [1]
tau_p = ["K"]
se_target = [0.5]

[scenario]
area_side_km = 0.5
"#;

fn spec(text: &str, out: &Path, seed: u64) -> ExperimentSpec {
    let mut s = ExperimentSpec::from_toml(text).unwrap();
    s.output_dir = out.to_path_buf();
    s.master_seed = Some(seed);
    s
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn three_realizations_give_three_traces_and_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&spec(SMALL, dir.path(), 5)).unwrap();
    assert_eq!(outcome.runs.len(), 3);
    assert_eq!(outcome.summary.len(), 1);
    for r in 0..3 {
        assert!(trace_file(dir.path(), 0, r).is_file());
        assert!(sidecar_file(dir.path(), 0, r).is_file());
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert_eq!(outcome.summary[0].runs, 3);
    assert!((0.0..=1.0).contains(&outcome.summary[0].feasibility_rate));
}

#[test]
fn repeated_sweeps_are_byte_identical_without_timing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut sa = spec(SMALL, a.path(), 11);
    let mut sb = spec(SMALL, b.path(), 11);
    sa.emit.timing = false;
    sb.emit.timing = false;
    sb.workers = 1;
    run_experiment(&sa).unwrap();
    run_experiment(&sb).unwrap();
    let fa = files_under(a.path());
    let fb = files_under(b.path());
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(a.path()).unwrap(), y.strip_prefix(b.path()).unwrap());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn different_master_seeds_change_the_scenarios() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_experiment(&spec(SMALL, a.path(), 1)).unwrap();
    let rb = run_experiment(&spec(SMALL, b.path(), 2)).unwrap();
    assert_ne!(ra.runs[0].seed, rb.runs[0].seed);
    let seeds: std::collections::BTreeSet<u64> = ra.runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 3);
}

#[test]
fn summary_ee_matches_recomputation_from_stored_theta() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&spec(SMALL, dir.path(), 21)).unwrap();
    let mut recomputed = Vec::new();
    for r in 0..3 {
        let car: RunSidecar = read_json(&sidecar_file(dir.path(), 0, r)).unwrap();
        let scenario = Scenario::generate(&car.scenario_config).unwrap();
        let pd = ProblemData::precompute(&scenario, &car.power_model, &car.se_targets).unwrap();
        let theta = ThetaVector::new(car.theta_opt.clone(), scenario.num_users()).unwrap();
        let ee = energy_efficiency(&theta, &pd);
        assert!((ee - car.ee_bit_per_j).abs() <= 1e-9 * ee, "run {r}: {ee} vs {}", car.ee_bit_per_j);
        recomputed.push(ee / 1e6);
    }
    let mean = recomputed.iter().sum::<f64>() / 3.0;
    let row = &outcome.summary[0];
    assert!((mean - row.mean_ee_Mbit_per_J).abs() <= 1e-9 * mean);
}

#[test]
fn trace_columns_and_per_round_monotonicity() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&spec(SMALL, dir.path(), 3)).unwrap();
    for r in 0..3 {
        let mut rdr = csv::Reader::from_path(trace_file(dir.path(), 0, r)).unwrap();
        let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(
            header,
            [
                "outer_iter",
                "inner_iter",
                "xi",
                "f_xi",
                "ee_Mbit_per_J",
                "penalty_sum",
                "violation",
                "alpha_y",
                "alpha_theta",
                "branch"
            ]
        );
        let mut last: Option<(usize, f64)> = None;
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec.unwrap();
            let outer: usize = rec[0].parse().unwrap();
            let f: f64 = rec[3].parse().unwrap();
            if let Some((o, prev)) = last {
                if o == outer {
                    assert!(f >= prev - 1e-12 * prev.abs().max(1.0), "round {outer}: {f} < {prev}");
                }
            }
            last = Some((outer, f));
            rows += 1;
        }
        assert!(rows > 0);
        let car: RunSidecar = read_json(&sidecar_file(dir.path(), 0, r)).unwrap();
        if car.status == cellfree_apg::solver::SolveStatus::Converged {
            assert!(car.violation_final <= car.solver_config.eps_feas);
        }
    }
}

#[test]
fn sum_se_grows_with_users_at_fixed_aps() {
    let text = r#"
realizations = 2
[sweep]
num_aps = [50]
num_users = [10, 20, 40]
antennas = [2]
tau_p = ["K"]
se_target = [1.0]
[emit]
trace = false
"#;
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&spec(text, dir.path(), 8)).unwrap();
    let se: Vec<f64> = outcome.summary.iter().map(|r| r.mean_sum_se).collect();
    assert_eq!(se.len(), 3);
    assert!(se.windows(2).all(|w| w[1] > w[0]), "{se:?}");
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let mut s = ExperimentSpec::load(&path).unwrap();
        s.master_seed = Some(1);
        s.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 1);
}

#[test]
fn unknown_keys_and_bad_tau_p_are_usage_errors() {
    let e = ExperimentSpec::from_toml("realisations = 3").unwrap_err();
    assert_eq!(e.exit_code(), 1);
    let mut s = ExperimentSpec::from_toml("[sweep]\ntau_p = [\"L\"]").unwrap();
    s.master_seed = Some(1);
    assert_eq!(s.validate().unwrap_err().exit_code(), 1);
}

fn cellfree() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cellfree"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, SMALL).unwrap();

    // missing mandatory --seed
    let st = cellfree().args(["sweep", "--config"]).arg(&cfg).output().unwrap().status;
    assert_eq!(st.code(), Some(1));

    // unreadable config
    let st = cellfree()
        .args(["sweep", "--seed", "1", "--config"])
        .arg(dir.path().join("nope.toml"))
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(2));

    let out = dir.path().join("out");
    let st = cellfree()
        .args(["sweep", "--seed", "1", "--no-timing", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(0));
    assert!(out.join("summary.csv").is_file());
}

#[test]
fn generate_then_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("scenario.json");
    let st = cellfree()
        .args([
            "generate",
            "--num-aps",
            "10",
            "--num-users",
            "3",
            "--antennas",
            "2",
            "--area-km",
            "0.5",
            "--seed",
            "4",
            "--out",
        ])
        .arg(&replay)
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(0));
    let out = dir.path().join("solve");
    let st = cellfree().args(["solve", "--input"]).arg(&replay).arg("--out-dir").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(0));
    assert!(out.join("trace.csv").is_file());
    let car: RunSidecar = read_json(&out.join("result.json")).unwrap();
    assert_eq!(car.theta_opt.len(), 30);
    assert!(car.ee_bit_per_j > 0.0);
}
