use std::path::PathBuf;
use std::process::ExitCode;

use cellfree_apg::{PowerModel, Scenario, ScenarioConfig, SolverConfig};
use cellfree_cli::check::run_checks;
use cellfree_cli::output::{read_json, write_json};
use cellfree_cli::run::{run_experiment, run_single, sidecar, Replay};
use cellfree_cli::{CliError, CliResult, ExperimentSpec};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cellfree", version, about = "Energy-efficiency power control for cell-free massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one network realization and write it as a replay file.
    Generate(GenerateArgs),
    /// Solve one replay file.
    Solve(SolveArgs),
    /// Run a Monte-Carlo parameter sweep from a TOML experiment file.
    Sweep(SweepArgs),
    /// Run the oracle suite and print one line per comparison.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    num_aps: usize,
    #[arg(long)]
    num_users: usize,
    #[arg(long, default_value_t = 1)]
    antennas: usize,
    #[arg(long)]
    tau_p: Option<usize>,
    #[arg(long, default_value_t = 200)]
    tau_c: usize,
    #[arg(long, default_value_t = 1.0)]
    area_km: f64,
    #[arg(long, default_value_t = 1.0)]
    se_target: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// TOML file with solver settings; defaults otherwise.
    #[arg(long)]
    solver: Option<PathBuf>,
    #[arg(long, default_value = "solve_out")]
    out_dir: PathBuf,
    #[arg(long)]
    no_trace: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Master seed; every run's scenario seed is derived from it.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Write zeros in timing fields so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let cfg = ScenarioConfig {
        num_aps: a.num_aps,
        num_users: a.num_users,
        antennas_per_ap: a.antennas,
        tau_c: a.tau_c,
        tau_p: a.tau_p.unwrap_or(a.num_users),
        area_side_km: a.area_km,
        seed: a.seed,
        ..Default::default()
    };
    let scenario = Scenario::generate(&cfg)?;
    let replay = Replay { scenario, power_model: PowerModel::default(), se_targets: vec![a.se_target; a.num_users] };
    write_json(&a.out, &replay)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn solve(a: SolveArgs) -> CliResult<()> {
    let replay: Replay = read_json(&a.input)?;
    let solver: SolverConfig = match &a.solver {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => SolverConfig::default(),
    };
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let trace = (!a.no_trace).then(|| a.out_dir.join("trace.csv"));
    let result = run_single(&replay.scenario, &replay.power_model, &replay.se_targets, &solver, trace.as_deref())?;
    let car = sidecar(None, 0, &replay.scenario, &replay.power_model, &replay.se_targets, &solver, &result, true);
    write_json(&a.out_dir.join("result.json"), &car)?;
    println!(
        "status={:?} ee={:.6} Mbit/J sum_se={:.4} violation={:.3e} outer={} inner={} time={:.3}s",
        result.status,
        result.ee / 1e6,
        car.sum_se,
        result.violation_final,
        result.outer_iters,
        result.inner_iters_total,
        result.wall_time_s
    );
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    let mut spec = ExperimentSpec::load(&a.config)?;
    spec.master_seed = Some(a.seed);
    if let Some(out) = a.out {
        spec.output_dir = out;
    }
    if let Some(w) = a.workers {
        spec.workers = w;
    }
    if a.no_timing {
        spec.emit.timing = false;
    }
    let outcome = run_experiment(&spec)?;
    for row in &outcome.summary {
        println!(
            "point {} M={} K={} N={} tau_p={} S_o={}: mean EE {:.4} Mbit/J, sum SE {:.3}, feasible {:.0}%",
            row.point,
            row.num_aps,
            row.num_users,
            row.antennas,
            row.tau_p,
            row.se_target,
            row.mean_ee_Mbit_per_J,
            row.mean_sum_se,
            100.0 * row.feasibility_rate
        );
    }
    println!("{} runs written to {}", outcome.runs.len(), outcome.output_dir.display());
    Ok(())
}

fn check(seed: u64) -> CliResult<()> {
    let reports = run_checks(seed)?;
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::Internal(format!("{failed} oracle comparison(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Check { seed } => check(seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
