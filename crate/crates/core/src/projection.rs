//! Euclidean projection onto `{theta >= 0, ||theta_m||^2 <= 1/N for all m}`.
//!
//! The set is a product of per-AP balls intersected with the orthant, so the
//! projection splits by block: clamp the negative entries, then pull the
//! block radially back onto the ball if it is still outside.

use serde::{Deserialize, Serialize};

use crate::problem::ThetaVector;

/// Solver-internal tolerance for feasibility assertions.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSetSpec {
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas: usize,
}

impl FeasibleSetSpec {
    pub fn new(num_aps: usize, num_users: usize, antennas: usize) -> Self {
        assert!(antennas > 0, "need at least one antenna per AP");
        Self { num_aps, num_users, antennas }
    }

    /// Per-AP ball radius `sqrt(1/N)`.
    pub fn radius(&self) -> f64 {
        (1.0 / self.antennas as f64).sqrt()
    }

    pub fn radius_sq(&self) -> f64 {
        1.0 / self.antennas as f64
    }
}

/// Projects one AP block in place.
pub fn project_block(block: &mut [f64], radius: f64) {
    let mut sq = 0.0;
    for x in block.iter_mut() {
        // NaN is sent to zero as well
        if !(*x > 0.0) {
            *x = 0.0;
        }
        sq += *x * *x;
    }
    let norm = sq.sqrt();
    if norm > radius {
        let mut scale = radius / norm;
        // rounding can leave the rescaled norm one ulp outside; shrink until
        // the computed norm is inside so a second projection is a no-op
        loop {
            block.iter_mut().for_each(|x| *x *= scale);
            if block.iter().map(|x| x * x).sum::<f64>().sqrt() <= radius {
                break;
            }
            scale = 1.0 - f64::EPSILON;
        }
    }
}

/// Projects an arbitrary `M*K` vector onto the feasible set.
pub fn project(u: &[f64], spec: &FeasibleSetSpec) -> ThetaVector {
    assert_eq!(u.len(), spec.num_aps * spec.num_users, "projection input has wrong length");
    let mut out = u.to_vec();
    let r = spec.radius();
    out.chunks_exact_mut(spec.num_users).for_each(|b| project_block(b, r));
    ThetaVector::from_projected(out, spec.num_users)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// AP block with the largest violation, `max(||theta_m||^2 - 1/N, -min_k theta_mk)`.
    pub worst_block: usize,
    pub worst_violation: f64,
}

/// Feasibility check with slack `tol` on both the sign and the ball
/// constraints.
pub fn is_feasible(theta: &[f64], spec: &FeasibleSetSpec, tol: f64) -> FeasibilityReport {
    let mut worst_block = 0;
    let mut worst_violation = f64::NEG_INFINITY;
    let mut feasible = true;
    for (m, block) in theta.chunks_exact(spec.num_users).enumerate() {
        let sq: f64 = block.iter().map(|x| x * x).sum();
        let min = block.iter().copied().fold(f64::INFINITY, f64::min);
        let ball = sq - spec.radius_sq();
        let violation = if ball.is_nan() || min.is_nan() { f64::INFINITY } else { ball.max(-min) };
        if !(ball <= tol) || !(min >= -tol) {
            feasible = false;
        }
        if violation > worst_violation {
            worst_violation = violation;
            worst_block = m;
        }
    }
    FeasibilityReport { feasible, worst_block, worst_violation }
}
