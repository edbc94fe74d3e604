//! Brute-force references used to check the closed forms: central finite
//! differences, exhaustive grid projection and exhaustive grid maximization.
//!
//! The objective used here is a dense re-transcription from `beta` and the
//! channel-estimate variances, looping over every user pair; it does not go
//! through [`crate::problem::CouplingTerms`] or the sparse pair coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemData;
use crate::projection::FeasibleSetSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub reference: f64,
    pub candidate: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    /// `rel_error <= tolerance` when `relative`, otherwise `abs_error <= tolerance`.
    pub relative: bool,
    pub pass: bool,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, reference: f64, candidate: f64, tolerance: f64, relative: bool) -> Self {
        let abs_error = (reference - candidate).abs();
        let rel_error = if reference == 0.0 { abs_error } else { abs_error / reference.abs() };
        let err = if relative { rel_error } else { abs_error };
        Self {
            quantity: quantity.into(),
            reference,
            candidate,
            abs_error,
            rel_error,
            tolerance,
            relative,
            pass: err <= tolerance,
        }
    }
}

impl std::fmt::Display for OracleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}: ref={:.9e} got={:.9e} abs={:.3e} rel={:.3e} tol={:.1e} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.quantity,
            self.reference,
            self.candidate,
            self.abs_error,
            self.rel_error,
            self.tolerance,
            if self.relative { "rel" } else { "abs" },
        )
    }
}

/// Default FD step `h_i = 1e-6 (1 + |x_i|)`.
pub fn default_fd_step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

/// Central differences of `f` at `x`. With `nonnegative`, the step is
/// shrunk to `x_i` where `x_i - h` would leave the orthant, and a forward
/// difference is used at `x_i = 0`.
pub fn central_difference<F>(mut f: F, x: &[f64], step: impl Fn(f64) -> f64, nonnegative: bool) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut work = x.to_vec();
    (0..x.len())
        .map(|i| {
            let mut h = step(x[i]);
            let xi = x[i];
            if nonnegative && xi - h < 0.0 {
                if xi > 0.0 {
                    h = xi;
                } else {
                    work[i] = xi + h;
                    let fp = f(&work);
                    let step = work[i] - xi;
                    work[i] = xi;
                    let f0 = f(&work);
                    return (fp - f0) / step;
                }
            }
            // divide by the realized step, not 2h, to cancel representation error
            let (xp, xm) = (xi + h, xi - h);
            work[i] = xp;
            let fp = f(&work);
            work[i] = xm;
            let fm = f(&work);
            work[i] = xi;
            (fp - fm) / (xp - xm)
        })
        .collect()
}

/// Central-difference gradient of the penalized objective with per-coordinate
/// step `h_scale (1 + |theta_i|)`.
pub fn fd_gradient(theta: &[f64], pd: &ProblemData, xi: f64, h_scale: f64) -> Vec<f64> {
    let model = DenseModel::new(pd);
    central_difference(|x| model.penalized(x, xi), theta, |t| h_scale * (1.0 + t.abs()), true)
}

/// Max componentwise error normalized by the largest reference component.
pub fn max_rel_error(reference: &[f64], candidate: &[f64]) -> f64 {
    assert_eq!(reference.len(), candidate.len());
    let scale = reference.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let err = reference.iter().zip(candidate).fold(0.0f64, |a, (r, c)| a.max((r - c).abs()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Dense model of SE, power and QoS rebuilt from `beta`, the estimate
/// variances and pilot sharing.
#[derive(Debug, Clone)]
pub struct DenseModel {
    m: usize,
    k: usize,
    n: f64,
    rho: f64,
    prelog: f64,
    bandwidth: f64,
    beta: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
    shares: Vec<Vec<bool>>,
    sinr_target: Vec<f64>,
    p_fix: f64,
    radiated_scale: Vec<f64>,
}

impl DenseModel {
    pub fn new(pd: &ProblemData) -> Self {
        let (m, k) = (pd.num_aps, pd.num_users);
        let beta = (0..m).map(|a| (0..k).map(|u| pd.beta.get(a, u)).collect()).collect();
        // the self-pair coefficient is sqrt(gamma_mk)
        let mut gamma = vec![vec![0.0; k]; m];
        let mut shares = vec![vec![false; k]; k];
        for p in &pd.pairs {
            shares[p.interferer][p.user] = true;
            if p.interferer == p.user {
                for (a, c) in p.coeffs.iter().enumerate() {
                    gamma[a][p.user] = c * c;
                }
            }
        }
        let prelog = (pd.tau_c - pd.tau_p) as f64 / pd.tau_c as f64;
        let sinr_target = pd.se_targets.iter().map(|s| 2f64.powf(s / prelog) - 1.0).collect();
        let n = pd.antennas as f64;
        let radiated_scale = pd.amplifier_efficiency.iter().map(|alpha| pd.rho_d * pd.noise_w * n / alpha).collect();
        Self {
            m,
            k,
            n,
            rho: pd.rho_d,
            prelog,
            bandwidth: pd.bandwidth_hz,
            beta,
            gamma,
            shares,
            sinr_target,
            p_fix: pd.p_fix,
            radiated_scale,
        }
    }

    fn at(&self, x: &[f64], ap: usize, user: usize) -> f64 {
        x[ap * self.k + user]
    }

    /// `(signal, interference-plus-noise)` per user, in SINR units.
    pub fn sinr_parts(&self, x: &[f64]) -> Vec<(f64, f64)> {
        assert_eq!(x.len(), self.m * self.k);
        (0..self.k)
            .map(|k| {
                let mut desired = 0.0;
                for a in 0..self.m {
                    desired += self.gamma[a][k].sqrt() * self.at(x, a, k);
                }
                let mut pilot = 0.0;
                for kp in (0..self.k).filter(|&kp| kp != k && self.shares[kp][k]) {
                    let mut s = 0.0;
                    for a in 0..self.m {
                        s += self.gamma[a][kp].sqrt() * self.beta[a][k] / self.beta[a][kp] * self.at(x, a, kp);
                    }
                    pilot += s * s;
                }
                let mut spread = 0.0;
                for a in 0..self.m {
                    for kp in 0..self.k {
                        spread += self.beta[a][k] * self.at(x, a, kp).powi(2);
                    }
                }
                let nn = self.n * self.n;
                (self.rho * nn * desired * desired, self.rho * nn * pilot + self.rho * self.n * spread + 1.0)
            })
            .collect()
    }

    pub fn se(&self, x: &[f64]) -> Vec<f64> {
        self.sinr_parts(x).iter().map(|(s, d)| self.prelog * (1.0 + s / d).log2()).collect()
    }

    pub fn power(&self, x: &[f64]) -> f64 {
        let mut radiated = 0.0;
        for a in 0..self.m {
            for u in 0..self.k {
                radiated += self.radiated_scale[a] * self.at(x, a, u).powi(2);
            }
        }
        self.p_fix + radiated
    }

    pub fn energy_efficiency(&self, x: &[f64]) -> f64 {
        self.bandwidth * self.se(x).iter().sum::<f64>() / self.power(x)
    }

    /// QoS functions `a_k sqrt(d_k) - sqrt(n_k)` with `a_k^2 = target SINR`
    /// expressed in the same normalization.
    pub fn qos(&self, x: &[f64]) -> Vec<f64> {
        let nn = self.n * self.n;
        self.sinr_parts(x)
            .iter()
            .zip(&self.sinr_target)
            .map(|((s, d), t)| (t / (self.rho * nn)).sqrt() * d.sqrt() - (s / (self.rho * nn)).sqrt())
            .collect()
    }

    pub fn penalized(&self, x: &[f64], xi: f64) -> f64 {
        let penalty: f64 = self.qos(x).iter().map(|g| g.max(0.0).powi(2)).sum();
        self.energy_efficiency(x) - xi * penalty
    }

    /// True when every user's SE meets its target up to `slack` bit/s/Hz.
    pub fn meets_targets(&self, x: &[f64], slack: f64) -> bool {
        self.se(x).iter().zip(&self.sinr_target).all(|(se, t)| *se >= self.prelog * (1.0 + t).log2() - slack)
    }
}

fn grid_axis(radius: f64, resolution: f64) -> usize {
    (radius / resolution + 1e-9).floor() as usize
}

/// Best grid index for a scalar target in `[0, max_idx]`.
fn nearest_index(target: f64, resolution: f64, max_idx: usize) -> usize {
    if target <= 0.0 {
        return 0;
    }
    let lo = ((target / resolution).floor() as usize).min(max_idx);
    let hi = (lo + 1).min(max_idx);
    let dl = (lo as f64 * resolution - target).abs();
    let dh = (hi as f64 * resolution - target).abs();
    if dh < dl {
        hi
    } else {
        lo
    }
}

/// Nearest point to `u` among the grid points `resolution * Z^K` inside one
/// ball of radius `radius` in the orthant. Enumerates the first `K-1`
/// coordinates and solves the last one exactly.
pub fn grid_project_block(u: &[f64], radius: f64, resolution: f64) -> Result<Vec<f64>> {
    let k = u.len();
    if k == 0 || k > 3 {
        return Err(Error::Unsupported(format!("grid projection supports 1..=3 coordinates per block, got {k}")));
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidConfig("grid resolution must be positive".into()));
    }
    let r2 = radius * radius;
    let n_axis = grid_axis(radius, resolution);
    let mut best = vec![0.0; k];
    let mut best_d = f64::INFINITY;
    let mut prefix = vec![0usize; k - 1];
    loop {
        let head: Vec<f64> = prefix.iter().map(|&i| i as f64 * resolution).collect();
        let used: f64 = head.iter().map(|x| x * x).sum();
        if used <= r2 + 1e-12 {
            let last_max = grid_axis((r2 - used).max(0.0).sqrt(), resolution);
            let last = nearest_index(u[k - 1], resolution, last_max) as f64 * resolution;
            let d: f64 = head.iter().zip(u).map(|(h, x)| (h - x).powi(2)).sum::<f64>() + (last - u[k - 1]).powi(2);
            if d < best_d {
                best_d = d;
                best[..k - 1].copy_from_slice(&head);
                best[k - 1] = last;
            }
        }
        // odometer over the leading coordinates
        let mut pos = 0;
        loop {
            if pos == prefix.len() {
                return Ok(best);
            }
            prefix[pos] += 1;
            if prefix[pos] <= n_axis {
                break;
            }
            prefix[pos] = 0;
            pos += 1;
        }
    }
}

/// Grid projection of a full `M*K` vector, block by block.
pub fn grid_project(u: &[f64], spec: &FeasibleSetSpec, resolution: f64) -> Result<Vec<f64>> {
    if u.len() != spec.num_aps * spec.num_users {
        return Err(Error::InvalidConfig("grid projection input has wrong length".into()));
    }
    let r = (1.0 / spec.antennas as f64).sqrt();
    let mut out = Vec::with_capacity(u.len());
    for block in u.chunks(spec.num_users) {
        out.extend(grid_project_block(block, r, resolution)?);
    }
    Ok(out)
}

/// All grid points of one block's ball in the orthant, in lexicographic order.
fn block_grid(k: usize, radius: f64, resolution: f64) -> Vec<Vec<f64>> {
    let n_axis = grid_axis(radius, resolution);
    let r2 = radius * radius;
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * resolution).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= r2 + 1e-12 {
            out.push(p);
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] <= n_axis {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Exhaustive maximization of `f` over the grid of the feasible set.
/// Ties keep the first point in lexicographic order. Points where `f`
/// returns `None` are skipped.
pub fn grid_maximize_fn<F>(spec: &FeasibleSetSpec, resolution: f64, mut f: F) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let dim = spec.num_aps * spec.num_users;
    if dim == 0 || dim > 3 {
        return Err(Error::Unsupported(format!("grid maximization supports 1..=3 variables, got {dim}")));
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidConfig("grid resolution must be positive".into()));
    }
    let blocks = block_grid(spec.num_users, (1.0 / spec.antennas as f64).sqrt(), resolution);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut choice = vec![0usize; spec.num_aps];
    let mut x = vec![0.0; dim];
    loop {
        for (m, &c) in choice.iter().enumerate() {
            x[m * spec.num_users..(m + 1) * spec.num_users].copy_from_slice(&blocks[c]);
        }
        if let Some(v) = f(&x) {
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((x.clone(), v));
            }
        }
        let mut pos = spec.num_aps;
        loop {
            if pos == 0 {
                return best.ok_or_else(|| Error::Domain("no admissible grid point".into()));
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < blocks.len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridObjective {
    /// EE restricted to points meeting every SE target.
    ConstrainedEe,
    /// EE ignoring the targets.
    RawEe,
    /// Penalized objective with the given `xi`.
    Penalized(f64),
}

/// Exhaustive grid search of the chosen objective for `M*K <= 3`.
pub fn grid_maximize(pd: &ProblemData, objective: GridObjective, resolution: f64) -> Result<(Vec<f64>, f64)> {
    let model = DenseModel::new(pd);
    let spec = FeasibleSetSpec::new(pd.num_aps, pd.num_users, pd.antennas);
    grid_maximize_fn(&spec, resolution, |x| match objective {
        GridObjective::ConstrainedEe => model.meets_targets(x, 0.0).then(|| model.energy_efficiency(x)),
        GridObjective::RawEe => Some(model.energy_efficiency(x)),
        GridObjective::Penalized(xi) => Some(model.penalized(x, xi)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{eval_objective, PenaltyParams};
    use crate::problem::{se_per_user_theta, PowerModel, ThetaVector};
    use crate::scenario::{Scenario, ScenarioConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn fd_exact_on_affine() {
        let c = [0.3, -1.5, 2.0];
        let g = central_difference(
            |x| 0.5 + x.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>(),
            &[0.2, 0.7, 1.1],
            default_fd_step,
            false,
        );
        for (a, b) in g.iter().zip(&c) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
    }

    #[test]
    fn fd_on_quadratic() {
        let g = central_difference(|x| x.iter().map(|v| v * v).sum(), &[1.0, 1.0], default_fd_step, false);
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn fd_respects_orthant() {
        let mut seen_negative = false;
        let _ = central_difference(
            |x| {
                seen_negative |= x.iter().any(|v| *v < 0.0);
                x[0]
            },
            &[0.0, 1e-9],
            default_fd_step,
            true,
        );
        assert!(!seen_negative);
    }

    #[test]
    fn grid_projection_cases() {
        let spec = FeasibleSetSpec::new(1, 2, 1);
        let p = grid_project(&[3.0, 4.0], &spec, 1e-3).unwrap();
        assert!((p[0] - 0.6).abs() <= 2e-3 && (p[1] - 0.8).abs() <= 2e-3);
        assert_eq!(grid_project(&[-1.0, -2.0], &spec, 1e-3).unwrap(), vec![0.0, 0.0]);
        let p = grid_project(&[0.3141, 0.2718], &spec, 1e-3).unwrap();
        assert!((p[0] - 0.3141).abs() <= 1e-3 && (p[1] - 0.2718).abs() <= 1e-3);
        assert!(grid_project(&[0.0; 4], &FeasibleSetSpec::new(1, 4, 1), 1e-2).is_err());
    }

    #[test]
    fn grid_projection_three_coordinates_matches_exhaustive() {
        let u = [0.9, -0.2, 0.5];
        let res = 0.05;
        let p = grid_project_block(&u, 1.0, res).unwrap();
        let all = block_grid(3, 1.0, res);
        let d = |x: &[f64]| x.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let best = all.iter().map(|x| d(x)).fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(d(&p), best, epsilon = 1e-12);
    }

    #[test]
    fn concave_surrogate_maximized_within_resolution() {
        let spec = FeasibleSetSpec::new(1, 1, 1);
        let (x, f) = grid_maximize_fn(&spec, 1e-3, |x| Some(-(x[0] - 0.4321).powi(2))).unwrap();
        assert!((x[0] - 0.4321).abs() <= 1e-3);
        assert!(f <= 0.0);
    }

    #[test]
    fn refinement_never_lowers_the_maximum() {
        let spec = FeasibleSetSpec::new(1, 2, 2);
        let f = |x: &[f64]| Some((1.0 + 3.0 * x[0]).ln() + (1.0 + x[1]).ln() - x[0] * x[1] * 2.0);
        let (_, coarse) = grid_maximize_fn(&spec, 0.02, f).unwrap();
        let (_, fine) = grid_maximize_fn(&spec, 0.01, f).unwrap();
        assert!(fine >= coarse);
    }

    #[test]
    fn dense_model_agrees_with_sparse_evaluation() {
        let cfg =
            ScenarioConfig { num_aps: 6, num_users: 5, antennas_per_ap: 2, tau_p: 2, seed: 11, ..Default::default() };
        let sc = Scenario::generate(&cfg).unwrap();
        let pd = ProblemData::precompute(&sc, &PowerModel::default(), &[1.0; 5]).unwrap();
        let model = DenseModel::new(&pd);
        let theta = ThetaVector::uniform_full_power(6, 5, 2);
        let dense = model.se(theta.values());
        for (a, b) in dense.iter().zip(se_per_user_theta(&theta, &pd)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12 * b.abs().max(1.0));
        }
        let e = eval_objective(&theta, &pd, &PenaltyParams::new(7.0));
        let f = model.penalized(theta.values(), 7.0);
        assert!((e.f_xi - f).abs() <= 1e-12 * f.abs());
    }

    #[test]
    fn report_pass_flag() {
        let r = OracleReport::new("x", 1.0, 1.0 + 1e-7, 1e-6, true);
        assert!(r.pass && r.rel_error <= 1e-6);
        let r = OracleReport::new("x", 1.0, 1.1, 1e-6, false);
        assert!(!r.pass);
    }
}
