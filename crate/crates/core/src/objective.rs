//! Penalized objective `f_xi = B u / v - xi sum_k max(0, g_k)^2`, its
//! closed-form gradient and a conservative Lipschitz constant of the
//! gradient over the feasible set.
//!
//! QoS for user `k` holds iff `g_k = a_k sqrt(d_k) - c_kk <= 0`, where
//! `d_k` is the SINR denominator (see [`CouplingTerms`]).

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::problem::{CouplingTerms, ProblemData, ThetaVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub xi: f64,
}

impl PenaltyParams {
    pub fn new(xi: f64) -> Self {
        assert!(xi >= 0.0, "penalty coefficient must be nonnegative");
        Self { xi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub f_xi: f64,
    /// `B u / v` (bit/J).
    pub ee_term: f64,
    /// `sum_k max(0, g_k)^2`.
    pub penalty_sum: f64,
    pub g_values: Vec<f64>,
    /// `max_k max(0, g_k)`.
    pub violation: f64,
    /// Per-user SE (bit/s/Hz).
    pub se: Vec<f64>,
    /// `v(theta)` (W).
    pub power_w: f64,
}

impl ObjectiveEval {
    /// Largest relative QoS shortfall `max_k max(0, g_k / (a_k sqrt(d_k)))`,
    /// i.e. `1 - sqrt(SINR_k / SINR_target)` for the worst violated user.
    pub fn relative_violation(&self, pd: &ProblemData, terms: &CouplingTerms) -> f64 {
        self.g_values
            .iter()
            .zip(&pd.qos_threshold)
            .zip(&terms.denom)
            .map(|((g, a), d)| (g / (a * d.sqrt())).max(0.0))
            .fold(0.0, f64::max)
    }
}

fn qos_values(terms: &CouplingTerms, pd: &ProblemData) -> Vec<f64> {
    (0..pd.num_users).map(|k| pd.qos_threshold[k] * terms.denom[k].sqrt() - terms.c[pd.self_pair[k]]).collect()
}

/// `g_k(theta)` for every user.
pub fn eval_g(theta: &ThetaVector, pd: &ProblemData) -> Vec<f64> {
    qos_values(&CouplingTerms::compute(theta, pd), pd)
}

fn assemble(terms: &CouplingTerms, pd: &ProblemData, pp: &PenaltyParams) -> ObjectiveEval {
    let se = terms.se(pd);
    let power_w = terms.total_power(pd);
    debug_assert!(power_w >= pd.p_fix && pd.p_fix > 0.0);
    let ee_term = pd.bandwidth_hz * se.iter().sum::<f64>() / power_w;
    let g_values = qos_values(terms, pd);
    let penalty_sum: f64 = g_values.iter().map(|g| g.max(0.0).powi(2)).sum();
    let violation = g_values.iter().fold(0.0f64, |acc, g| acc.max(*g));
    ObjectiveEval { f_xi: ee_term - pp.xi * penalty_sum, ee_term, penalty_sum, g_values, violation, se, power_w }
}

pub fn eval_objective(theta: &ThetaVector, pd: &ProblemData, pp: &PenaltyParams) -> ObjectiveEval {
    assemble(&CouplingTerms::compute(theta, pd), pd, pp)
}

pub fn grad_objective(theta: &ThetaVector, pd: &ProblemData, pp: &PenaltyParams) -> Vec<f64> {
    evaluate(theta, pd, pp).1
}

/// Objective and gradient from one pass over the coupling scalars.
pub fn evaluate(theta: &ThetaVector, pd: &ProblemData, pp: &PenaltyParams) -> (ObjectiveEval, Vec<f64>) {
    let terms = CouplingTerms::compute(theta, pd);
    let eval = assemble(&terms, pd, pp);
    let grad = gradient_from_terms(theta, pd, pp, &terms, &eval);
    (eval, grad)
}

/// Assembles `B (v grad u - u grad v) / v^2 - xi sum_k grad Psi_k`.
///
/// Per user `k` the EE and penalty parts both reduce to a multiple of the
/// desired-signal direction `A_k^T tilde_gamma_kk` plus a multiple of
/// `grad d_k`, so only two scalars per user are formed before scattering.
fn gradient_from_terms(
    theta: &ThetaVector,
    pd: &ProblemData,
    pp: &PenaltyParams,
    terms: &CouplingTerms,
    eval: &ObjectiveEval,
) -> Vec<f64> {
    let k_users = pd.num_users;
    let n = pd.antennas as f64;
    let rho = pd.rho_d;
    let pre = pd.prelog();
    let b_over_v = pd.bandwidth_hz / eval.power_w;
    let th = theta.values();
    let mut grad = vec![0.0; th.len()];

    // weight of grad d_k in the total gradient, per user
    let mut d_weight = vec![0.0; k_users];
    for k in 0..k_users {
        let (num, den) = (terms.signal[k], terms.denom[k]);
        let own = pd.self_pair[k];
        let c_kk = terms.c[own];
        let scale = pre / (LN_2 * (num + den));
        let penalty = 2.0 * pp.xi * eval.g_values[k].max(0.0);
        let signal_weight = b_over_v * scale * 2.0 * rho * n * n * c_kk + penalty;
        d_weight[k] = -b_over_v * scale * num / den - penalty * pd.qos_threshold[k] / (2.0 * den.sqrt());

        for (m, g) in pd.pairs[own].coeffs.iter().enumerate() {
            grad[m * k_users + k] += signal_weight * g;
        }
        if d_weight[k] != 0.0 {
            let (a, b) = pd.pair_range[k];
            for idx in (a..b).filter(|&i| i != own) {
                let pair = &pd.pairs[idx];
                let w = d_weight[k] * 2.0 * rho * n * n * terms.c[idx];
                for (m, g) in pair.coeffs.iter().enumerate() {
                    grad[m * k_users + pair.interferer] += w * g;
                }
            }
        }
    }

    // the beta-weighted part of every grad d_k, plus the power term
    let grad_v_scale = b_over_v * eval.se.iter().sum::<f64>() / eval.power_w * pd.transmit_scale();
    for m in 0..pd.num_aps {
        let h: f64 = pd.beta.row(m).iter().zip(&d_weight).map(|(b, w)| b * w).sum();
        let coef = 2.0 * rho * n * h - grad_v_scale * 2.0 / pd.amplifier_efficiency[m];
        let base = m * k_users;
        for k in 0..k_users {
            grad[base + k] += coef * th[base + k];
        }
    }
    grad
}

/// `grad v(theta)`, linear in `theta`.
pub fn grad_power(theta: &ThetaVector, pd: &ProblemData) -> Vec<f64> {
    let s = pd.transmit_scale();
    let k_users = pd.num_users;
    theta.values().iter().enumerate().map(|(i, t)| s * 2.0 / pd.amplifier_efficiency[i / k_users] * t).collect()
}

/// Components of the Lipschitz certificate: EE gradient terms and the
/// penalty term (the only one that scales with `xi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBound {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl LipschitzBound {
    pub fn total(&self) -> f64 {
        self.l1 + self.l2 + self.l3
    }
}

/// Upper bound on the Lipschitz constant of `grad f_xi` over the feasible
/// set, built from sup-norm and Lipschitz bounds of the pieces of the
/// gradient and combined with the sum / product / quotient rules.
///
/// All magnitudes are instantiated from `||theta||^2 <= M/N`, so
/// `|c_k'k| <= ||tilde_gamma_k'k|| sqrt(M/N)` and
/// `W_k <= (1/N) sum_m beta_mk`.
pub fn conservative_lipschitz_bound(pd: &ProblemData, pp: &PenaltyParams) -> LipschitzBound {
    let n = pd.antennas as f64;
    let rho = pd.rho_d;
    let radius = (pd.num_aps as f64 / n).sqrt();
    let r2 = radius * radius;
    let pre_ln2 = pd.prelog() / LN_2;
    let norm_sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();

    let mut sum_lip_grad_u = 0.0;
    let mut sum_bound_grad_u = 0.0;
    let mut sum_bound_u = 0.0;
    let mut penalty = 0.0;
    for k in 0..pd.num_users {
        let own = pd.self_pair[k];
        let own_sq = norm_sq(&pd.pairs[own].coeffs);
        let (a, b) = pd.pair_range[k];
        let cross: Vec<f64> = (a..b).filter(|&i| i != own).map(|i| norm_sq(&pd.pairs[i].coeffs)).collect();
        let cross_max = cross.iter().copied().fold(0.0, f64::max);
        let cross_sum: f64 = cross.iter().sum();
        let beta_col = pd.beta.column(k);
        let beta_max = beta_col.iter().copied().fold(0.0, f64::max);
        let beta_sum: f64 = beta_col.iter().sum();

        // Hessians of n_k and d_k: rank-one and rank-one-plus-diagonal
        // blocks, one per user column
        let lam_n = 2.0 * rho * n * n * own_sq;
        let lam_d = 2.0 * rho * n * n * cross_max + 2.0 * rho * n * beta_max;

        let n_max = rho * n * n * own_sq * r2;
        let d_max = rho * n * n * cross_sum * r2 + rho * beta_sum + 1.0;
        let lip_n = lam_n * radius;
        let lip_d = lam_d * radius;
        let lip_nd = (lam_n + lam_d) * radius;

        // grad n / (n + d), with n + d >= 1
        let lip_t1 = lam_n + lam_n * radius * lip_nd;
        // n grad d / ((n + d) d), with (n + d) d >= 1
        let bound_p = n_max * lam_d * radius;
        let lip_p = n_max * lam_d + lam_d * radius * lip_n;
        let lip_q = d_max * lip_nd + (n_max + d_max) * lip_d;
        let lip_t2 = lip_p + bound_p * lip_q;

        sum_lip_grad_u += pre_ln2 * (lip_t1 + lip_t2);
        sum_bound_grad_u += pre_ln2 * (lam_n * radius + n_max.min(1.0) * lam_d * radius);
        sum_bound_u += pd.prelog() * (1.0 + n_max).log2();

        // grad Psi_k = 2 max(0, g_k) grad g_k
        let a_k = pd.qos_threshold[k];
        let bound_g = a_k * d_max.sqrt();
        let bound_grad_g = a_k * lam_d * radius / 2.0 + own_sq.sqrt();
        let lip_grad_g = a_k * (lam_d / 2.0 + lam_d * lam_d * r2 / 4.0);
        penalty += bound_g * lip_grad_g + bound_grad_g * bound_grad_g;
    }

    let inv_alpha_max = pd.amplifier_efficiency.iter().map(|a| 1.0 / a).fold(0.0, f64::max);
    let lam_v = 2.0 * pd.transmit_scale() * inv_alpha_max;
    let bound_grad_v = lam_v * radius;
    let pf = pd.p_fix;
    let bw = pd.bandwidth_hz;

    let l1 = bw * sum_lip_grad_u / pf;
    let l2 = bw
        * (2.0 * sum_bound_grad_u * bound_grad_v / (pf * pf)
            + sum_bound_u * lam_v / (pf * pf)
            + 2.0 * sum_bound_u * bound_grad_v * bound_grad_v / (pf * pf * pf));
    let l3 = 2.0 * pp.xi * penalty;
    LipschitzBound { l1, l2, l3 }
}
