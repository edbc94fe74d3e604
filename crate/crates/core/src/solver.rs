//! Penalty continuation around an accelerated projected gradient ascent.
//!
//! Each outer round maximizes `f_xi` with momentum extrapolation, a monitor
//! step that keeps the objective nondecreasing, and Barzilai-Borwein seeded
//! backtracking for both step sizes. Between rounds `xi` grows geometrically.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::objective::{conservative_lipschitz_bound, evaluate, PenaltyParams};
use crate::problem::{theta_to_eta, CouplingTerms, ProblemData, ThetaVector};
use crate::projection::{is_feasible, project, FeasibleSetSpec, DEFAULT_FEASIBILITY_TOL};

pub const MIN_STEP: f64 = 1e-12;
pub const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    /// BB-seeded backtracking on both step sizes.
    BbLineSearch,
    /// Constant `0.99 / L` from the conservative Lipschitz bound.
    FixedLipschitz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theta0 {
    UniformFullPower,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub step_mode: StepMode,
    /// Backtracking shrink factor.
    pub nu: f64,
    /// Sufficient-increase margin.
    pub delta: f64,
    /// Relative progress tolerance of the inner loop.
    pub varsigma: f64,
    pub inner_window: usize,
    /// Initial penalty; adaptive when `None`.
    pub xi0: Option<f64>,
    pub rho_growth: f64,
    /// Tolerance on `max_k max(0, g_k)`.
    pub eps_feas: f64,
    /// Tolerance on the relative QoS shortfall `max_k max(0, g_k / (a_k sqrt(d_k)))`.
    pub qos_rel_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub max_backtracks: usize,
    pub theta0: Theta0,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_mode: StepMode::BbLineSearch,
            nu: 0.5,
            delta: 1e-6,
            varsigma: 1e-3,
            inner_window: 10,
            xi0: None,
            rho_growth: 10.0,
            eps_feas: 1e-6,
            qos_rel_tol: 1e-4,
            max_inner: 2000,
            max_outer: 40,
            max_backtracks: 60,
            theta0: Theta0::UniformFullPower,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return bad("nu must lie in (0, 1)");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.varsigma > 0.0) {
            return bad("varsigma must be positive");
        }
        if !(self.rho_growth > 1.0) {
            return bad("rho_growth must exceed 1");
        }
        if !(self.eps_feas >= 0.0) || !(self.qos_rel_tol >= 0.0) {
            return bad("feasibility tolerances must be nonnegative");
        }
        if self.inner_window == 0 || self.max_inner == 0 || self.max_outer == 0 {
            return bad("iteration limits must be positive");
        }
        if let Some(xi) = self.xi0 {
            if !(xi >= 0.0) || !xi.is_finite() {
                return bad("xi0 must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Starting point of an outer round.
    Start,
    Z,
    V,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Start => "start",
            Branch::Z => "z",
            Branch::V => "v",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub outer_iter: usize,
    pub inner_iter: usize,
    pub xi: f64,
    pub f_xi: f64,
    pub ee_term: f64,
    pub penalty_sum: f64,
    pub violation: f64,
    pub alpha_y: f64,
    pub alpha_theta: f64,
    pub branch: Branch,
    pub backtracks: usize,
}

/// Objective value and gradient at one point, plus diagnostics for the trace.
#[derive(Debug, Clone)]
pub struct Sample {
    pub f: f64,
    pub grad: Vec<f64>,
    pub ee_term: f64,
    pub penalty_sum: f64,
    pub violation: f64,
}

impl Sample {
    /// Sample of an objective without EE/penalty split.
    pub fn plain(f: f64, grad: Vec<f64>) -> Self {
        Self { f, grad, ee_term: f, penalty_sum: 0.0, violation: 0.0 }
    }
}

fn sample_of(theta: &ThetaVector, pd: &ProblemData, pp: &PenaltyParams) -> Result<Sample> {
    let (e, grad) = evaluate(theta, pd, pp);
    if !e.f_xi.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("objective or gradient not finite at xi = {:e}", pp.xi)));
    }
    Ok(Sample { f: e.f_xi, grad, ee_term: e.ee_term, penalty_sum: e.penalty_sum, violation: e.violation })
}

/// Extrapolation coefficients `(t_prev / t, (t_prev - 1) / t)` and the next
/// momentum scalar `(sqrt(4 t^2 + 1) + 1) / 2`.
pub fn momentum_update(t_prev: f64, t: f64) -> ((f64, f64), f64) {
    debug_assert!(t >= t_prev && t_prev >= 1.0);
    ((t_prev / t, (t_prev - 1.0) / t), ((4.0 * t * t + 1.0).sqrt() + 1.0) / 2.0)
}

/// BB1 step `s^T s / s^T r`. `r` is the difference of descent directions,
/// so for an ascent problem pass the negated gradient difference. Falls back
/// to `fallback` when the curvature estimate is unusable.
pub fn bb_initial_step(s: &[f64], r: &[f64], fallback: f64) -> f64 {
    let ss: f64 = s.iter().map(|x| x * x).sum();
    let sr: f64 = s.iter().zip(r).map(|(a, b)| a * b).sum();
    let alpha = ss / sr;
    let chosen = if sr > 0.0 && alpha.is_finite() && alpha > 0.0 { alpha } else { fallback };
    chosen.clamp(MIN_STEP, MAX_STEP)
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub point: ThetaVector,
    pub sample: Sample,
    /// Step size that produced `point`.
    pub alpha: f64,
    pub shrinks: usize,
    /// The sufficient-increase test never passed within the cap.
    pub degraded: bool,
}

fn ascent_candidate(base: &ThetaVector, grad: &[f64], alpha: f64, spec: &FeasibleSetSpec) -> ThetaVector {
    let u: Vec<f64> = base.values().iter().zip(grad).map(|(x, g)| x + alpha * g).collect();
    project(&u, spec)
}

fn sq_dist(a: &ThetaVector, b: &ThetaVector) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Projected ascent from `base` with backtracking until
/// `f(new) >= f(base) + delta ||new - base||^2`. After `max_backtracks`
/// shrinks the best candidate seen is returned with `degraded = true`.
pub fn backtrack_step<F>(
    base: &ThetaVector,
    base_sample: &Sample,
    alpha_init: f64,
    spec: &FeasibleSetSpec,
    cfg: &SolverConfig,
    mut eval: F,
) -> Result<StepOutcome>
where
    F: FnMut(&ThetaVector) -> Result<Sample>,
{
    let mut alpha = alpha_init;
    let mut best: Option<StepOutcome> = None;
    for shrinks in 0..=cfg.max_backtracks {
        let point = ascent_candidate(base, &base_sample.grad, alpha, spec);
        let sample = eval(&point)?;
        if !sample.f.is_finite() {
            return Err(Error::NonFinite(format!("objective not finite at step {alpha:e}")));
        }
        if sample.f >= base_sample.f + cfg.delta * sq_dist(&point, base) {
            return Ok(StepOutcome { point, sample, alpha, shrinks, degraded: false });
        }
        if best.as_ref().is_none_or(|b| sample.f > b.sample.f) {
            best = Some(StepOutcome { point, sample, alpha, shrinks, degraded: true });
        }
        alpha *= cfg.nu;
    }
    let mut out = best.expect("at least one candidate is evaluated");
    out.shrinks = cfg.max_backtracks;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub theta: ThetaVector,
    pub sample: Sample,
    pub converged: bool,
    pub iterations: usize,
    pub backtracks: usize,
    pub degraded_steps: usize,
    /// Last accepted `(alpha_y, alpha_theta)`.
    pub alphas: (f64, f64),
}

/// Step-size policy for [`apg_maximize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// BB seeds, initially `alphas`, with backtracking; `fallback` replaces
    /// unusable BB estimates on the first iteration.
    LineSearch {
        alphas: (f64, f64),
        fallback: f64,
    },
    Fixed(f64),
}

/// Inner APG loop on a generic smooth objective over the feasible set.
/// `record` receives `(inner_iter, sample at theta, alpha_y, alpha_theta,
/// branch, shrinks)` for the start point and every iteration.
pub fn apg_maximize<F, R>(
    start: &ThetaVector,
    spec: &FeasibleSetSpec,
    cfg: &SolverConfig,
    policy: StepPolicy,
    mut eval: F,
    mut record: R,
) -> Result<InnerOutcome>
where
    F: FnMut(&ThetaVector) -> Result<Sample>,
    R: FnMut(usize, &Sample, f64, f64, Branch, usize),
{
    let fixed = matches!(policy, StepPolicy::Fixed(_));
    let (mut alpha_y, mut alpha_theta, fallback) = match policy {
        StepPolicy::LineSearch { alphas, fallback } => (alphas.0, alphas.1, fallback),
        StepPolicy::Fixed(a) => (a, a, a),
    };

    let mut theta = start.clone();
    let mut theta_prev = start.clone();
    let mut z = start.clone();
    let mut s_theta = eval(&theta)?;
    let mut s_z = s_theta.clone();
    let (mut t_prev, mut t) = (1.0, 1.0);
    // (point, gradient) of the previous extrapolated point and monitor base
    let mut y_last: Option<(ThetaVector, Vec<f64>)> = None;
    let mut theta_last: Option<(ThetaVector, Vec<f64>)> = None;
    let mut history = vec![s_theta.f];
    let mut backtracks = 0;
    let mut degraded_steps = 0;
    record(0, &s_theta, alpha_y, alpha_theta, Branch::Start, 0);

    for n in 1..=cfg.max_inner {
        let ((c_z, c_m), t_next) = momentum_update(t_prev, t);
        let y_vals: Vec<f64> = theta
            .values()
            .iter()
            .zip(z.values())
            .zip(theta_prev.values())
            .map(|((x, zz), xp)| x + c_z * (zz - x) + c_m * (x - xp))
            .collect();
        let y = ThetaVector::extrapolated(y_vals, spec.num_users);
        let s_y = if c_z == 1.0 && c_m == 0.0 { s_z.clone() } else { eval(&y)? };

        let (z_new, v_new, shrinks) = if fixed {
            let z_pt = ascent_candidate(&y, &s_y.grad, alpha_y, spec);
            let s_zn = eval(&z_pt)?;
            let v_pt = ascent_candidate(&theta, &s_theta.grad, alpha_theta, spec);
            let s_vn = eval(&v_pt)?;
            ((z_pt, s_zn), (v_pt, s_vn), 0)
        } else {
            if let Some((yl, gl)) = &y_last {
                let (s, r) = bb_pair(&z, &s_z.grad, yl, gl);
                alpha_y = bb_initial_step(&s, &r, curvature_fallback(&s, &r, alpha_y, fallback));
            }
            if let Some((tl, gl)) = &theta_last {
                let (s, r) = bb_pair(&theta, &s_theta.grad, tl, gl);
                alpha_theta = bb_initial_step(&s, &r, curvature_fallback(&s, &r, alpha_theta, fallback));
            }
            let zs = backtrack_step(&y, &s_y, alpha_y, spec, cfg, &mut eval)?;
            let vs = backtrack_step(&theta, &s_theta, alpha_theta, spec, cfg, &mut eval)?;
            alpha_y = zs.alpha;
            alpha_theta = vs.alpha;
            let shrinks = zs.shrinks + vs.shrinks;
            if zs.degraded {
                degraded_steps += 1;
            }
            // a failed monitor step falls back to theta itself
            let v_pair = if vs.degraded && vs.sample.f < s_theta.f {
                degraded_steps += 1;
                (theta.clone(), s_theta.clone())
            } else {
                (vs.point, vs.sample)
            };
            ((zs.point, zs.sample), v_pair, shrinks)
        };
        backtracks += shrinks;

        y_last = Some((y, s_y.grad));
        theta_last = Some((theta.clone(), s_theta.grad.clone()));

        let branch = if z_new.1.f >= v_new.1.f { Branch::Z } else { Branch::V };
        let (next, s_next) = if branch == Branch::Z { z_new.clone() } else { v_new };
        theta_prev = std::mem::replace(&mut theta, next);
        s_theta = s_next;
        z = z_new.0;
        s_z = z_new.1;
        t_prev = t;
        t = t_next;

        history.push(s_theta.f);
        record(n, &s_theta, alpha_y, alpha_theta, branch, shrinks);

        if n >= cfg.inner_window {
            let old = history[n - cfg.inner_window];
            if (s_theta.f - old).abs() <= cfg.varsigma * s_theta.f.abs() {
                return Ok(InnerOutcome {
                    theta,
                    sample: s_theta,
                    converged: true,
                    iterations: n,
                    backtracks,
                    degraded_steps,
                    alphas: (alpha_y, alpha_theta),
                });
            }
        }
    }
    Ok(InnerOutcome {
        theta,
        sample: s_theta,
        converged: false,
        iterations: cfg.max_inner,
        backtracks,
        degraded_steps,
        alphas: (alpha_y, alpha_theta),
    })
}

/// Seed used when the BB curvature `s^T r` is not positive. The objective is
/// not concave, so negative curvature is common; reusing the previous step
/// there would freeze the step at its initial value, so the magnitude
/// `|s^T s / s^T r|` is used instead while it is finite and nonzero.
fn curvature_fallback(s: &[f64], r: &[f64], previous: f64, fallback: f64) -> f64 {
    let ss: f64 = s.iter().map(|x| x * x).sum();
    let sr: f64 = s.iter().zip(r).map(|(a, b)| a * b).sum();
    let magnitude = (ss / sr).abs();
    if magnitude.is_finite() && magnitude > 0.0 {
        magnitude
    } else if previous.is_finite() && previous > 0.0 {
        previous
    } else {
        fallback
    }
}

/// `(s, r)` for the BB rule of an ascent method: `s = x - x_old`,
/// `r = -(grad(x) - grad(x_old))`.
fn bb_pair(x: &ThetaVector, gx: &[f64], x_old: &ThetaVector, g_old: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = x.values().iter().zip(x_old.values()).map(|(a, b)| a - b).collect();
    let r = gx.iter().zip(g_old).map(|(a, b)| b - a).collect();
    (s, r)
}

/// One inner round of the penalized problem at fixed `xi`.
pub fn apg_inner(
    theta_start: &ThetaVector,
    xi: f64,
    pd: &ProblemData,
    cfg: &SolverConfig,
) -> Result<(InnerOutcome, Vec<IterationRecord>)> {
    let pp = PenaltyParams::new(xi);
    let spec = FeasibleSetSpec::new(pd.num_aps, pd.num_users, pd.antennas);
    let l = conservative_lipschitz_bound(pd, &pp).total();
    let policy = match cfg.step_mode {
        StepMode::FixedLipschitz => StepPolicy::Fixed(0.99 / l),
        StepMode::BbLineSearch => {
            let a = (1.0 / l).clamp(MIN_STEP, MAX_STEP);
            StepPolicy::LineSearch { alphas: (a, a), fallback: a }
        }
    };
    let mut trace = Vec::new();
    let out = apg_maximize(
        theta_start,
        &spec,
        cfg,
        policy,
        |x| sample_of(x, pd, &pp),
        |n, s, ay, at, b, bt| trace.push(record_row(0, n, xi, s, ay, at, b, bt)),
    )?;
    Ok((out, trace))
}

#[allow(clippy::too_many_arguments)]
fn record_row(
    outer: usize,
    inner: usize,
    xi: f64,
    s: &Sample,
    ay: f64,
    at: f64,
    b: Branch,
    bt: usize,
) -> IterationRecord {
    IterationRecord {
        outer_iter: outer,
        inner_iter: inner,
        xi,
        f_xi: s.f,
        ee_term: s.ee_term,
        penalty_sum: s.penalty_sum,
        violation: s.violation,
        alpha_y: ay,
        alpha_theta: at,
        branch: b,
        backtracks: bt,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub fixed_w: f64,
    pub radiated_w: f64,
    /// Load-dependent backhaul power, reported but not optimized.
    pub traffic_w: f64,
    pub total_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    /// Feasible, but the last round stopped on the iteration cap.
    FeasibleNotConverged,
    InfeasibilitySuspected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub theta_opt: ThetaVector,
    pub eta_opt: Matrix,
    /// `B sum_k u_k / v` (bit/J).
    pub ee: f64,
    pub se_per_user: Vec<f64>,
    pub violation_final: f64,
    pub relative_violation_final: f64,
    pub power_report: PowerReport,
    pub status: SolveStatus,
    pub xi0: f64,
    pub xi_final: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub backtracks_total: usize,
    pub degraded_steps: usize,
    pub wall_time_s: f64,
    pub trace: Vec<IterationRecord>,
}

impl SolverResult {
    pub fn feasible(&self) -> bool {
        self.status != SolveStatus::InfeasibilitySuspected
    }
}

/// `gamma_mk` recovered from the self-pair coefficients `sqrt(gamma_mk)`.
pub fn estimate_variances(pd: &ProblemData) -> Matrix {
    let mut g = Matrix::zeros(pd.num_aps, pd.num_users);
    for k in 0..pd.num_users {
        for (m, c) in pd.pairs[pd.self_pair[k]].coeffs.iter().enumerate() {
            g.set(m, k, c * c);
        }
    }
    g
}

/// Default initial penalty: the EE term and the initial penalty start on
/// the same scale. The penalty is floored at `sum_k a_k^2`, its value at
/// zero power, so a nearly feasible start does not inflate `xi`.
pub fn adaptive_xi0(theta0: &ThetaVector, pd: &ProblemData) -> f64 {
    let e = crate::objective::eval_objective(theta0, pd, &PenaltyParams::new(0.0));
    let floor: f64 = pd.qos_threshold.iter().map(|a| a * a).sum();
    (e.ee_term.abs() / e.penalty_sum.max(floor)).max(1.0)
}

fn relative_violation(theta: &ThetaVector, pd: &ProblemData) -> (f64, f64) {
    let terms = CouplingTerms::compute(theta, pd);
    let mut abs = 0.0f64;
    let mut rel = 0.0f64;
    for k in 0..pd.num_users {
        let scale = pd.qos_threshold[k] * terms.denom[k].sqrt();
        let g = scale - terms.c[pd.self_pair[k]];
        abs = abs.max(g);
        rel = rel.max(g / scale);
    }
    (abs, rel)
}

pub fn solve(pd: &ProblemData, cfg: &SolverConfig) -> Result<SolverResult> {
    solve_with(pd, cfg, |_| {})
}

/// [`solve`] with a callback invoked on every trace row as it is produced.
pub fn solve_with<O>(pd: &ProblemData, cfg: &SolverConfig, mut observer: O) -> Result<SolverResult>
where
    O: FnMut(&IterationRecord),
{
    cfg.validate()?;
    let started = Instant::now();
    let spec = FeasibleSetSpec::new(pd.num_aps, pd.num_users, pd.antennas);
    let theta0 = match &cfg.theta0 {
        Theta0::UniformFullPower => ThetaVector::uniform_full_power(pd.num_aps, pd.num_users, pd.antennas),
        Theta0::Given(v) => {
            if v.len() != pd.dim() {
                return Err(Error::InvalidConfig(format!("theta0 has length {}, expected {}", v.len(), pd.dim())));
            }
            project(v, &spec)
        }
    };
    let xi0 = cfg.xi0.unwrap_or_else(|| adaptive_xi0(&theta0, pd));

    let mut xi = xi0;
    let mut theta = theta0;
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut backtracks_total = 0;
    let mut degraded_total = 0;
    let mut alphas: Option<(f64, f64)> = None;
    let mut f_prev_round: Option<f64> = None;
    let mut status = SolveStatus::InfeasibilitySuspected;
    let mut outer_iters = 0;
    // least-violating iterate, returned when no round ends feasible
    let mut fallback: Option<(f64, ThetaVector)> = None;

    for m in 0..cfg.max_outer {
        outer_iters = m + 1;
        let pp = PenaltyParams::new(xi);
        let l = conservative_lipschitz_bound(pd, &pp).total();
        let policy = match cfg.step_mode {
            StepMode::FixedLipschitz => StepPolicy::Fixed(0.99 / l),
            StepMode::BbLineSearch => {
                let a = (1.0 / l).clamp(MIN_STEP, MAX_STEP);
                StepPolicy::LineSearch { alphas: alphas.unwrap_or((a, a)), fallback: a }
            }
        };
        let out = apg_maximize(
            &theta,
            &spec,
            cfg,
            policy,
            |x| sample_of(x, pd, &pp),
            |n, s, ay, at, b, bt| {
                let row = record_row(m, n, xi, s, ay, at, b, bt);
                observer(&row);
                trace.push(row);
            },
        )?;
        debug_assert!(is_feasible(out.theta.values(), &spec, DEFAULT_FEASIBILITY_TOL).feasible);
        inner_total += out.iterations;
        backtracks_total += out.backtracks;
        degraded_total += out.degraded_steps;
        alphas = Some(out.alphas);
        theta = out.theta;

        let (abs_v, rel_v) = relative_violation(&theta, pd);
        let feasible = abs_v <= cfg.eps_feas && rel_v <= cfg.qos_rel_tol;
        let f = out.sample.f;
        let settled = f_prev_round.is_some_and(|fp| (f - fp).abs() < cfg.varsigma * f.abs());
        f_prev_round = Some(f);
        if feasible && (out.converged || settled) {
            status = SolveStatus::Converged;
            break;
        }
        if feasible {
            status = SolveStatus::FeasibleNotConverged;
        } else {
            status = SolveStatus::InfeasibilitySuspected;
            if fallback.as_ref().is_none_or(|(r, _)| rel_v < *r) {
                fallback = Some((rel_v, theta.clone()));
            }
        }
        if m + 1 < cfg.max_outer {
            xi *= cfg.rho_growth;
        }
    }
    if status == SolveStatus::InfeasibilitySuspected {
        if let Some((_, best)) = fallback {
            theta = best;
        }
    }

    let wall_time_s = started.elapsed().as_secs_f64();
    let terms = CouplingTerms::compute(&theta, pd);
    let se_per_user = terms.se(pd);
    let v = terms.total_power(pd);
    let sum_se: f64 = se_per_user.iter().sum();
    let radiated_w = v - pd.p_fix;
    let traffic_w = pd.bandwidth_hz * sum_se * pd.backhaul_traffic_w_per_bps.iter().sum::<f64>();
    let (violation_final, relative_violation_final) = relative_violation(&theta, pd);
    let eta_opt = theta_to_eta(&theta, &estimate_variances(pd))?;
    Ok(SolverResult {
        ee: pd.bandwidth_hz * sum_se / v,
        eta_opt,
        se_per_user,
        violation_final: violation_final.max(0.0),
        relative_violation_final: relative_violation_final.max(0.0),
        power_report: PowerReport { fixed_w: pd.p_fix, radiated_w, traffic_w, total_w: v + traffic_w },
        status,
        xi0,
        xi_final: xi,
        outer_iters,
        inner_iters_total: inner_total,
        backtracks_total,
        degraded_steps: degraded_total,
        wall_time_s,
        trace,
        theta_opt: theta,
    })
}
