//! Downlink total energy-efficiency power control for cell-free massive MIMO.
//!
//! The optimizer works on the large-scale fading statistics of a network
//! realization. QoS constraints are folded into the objective with a
//! quadratic penalty whose weight is grown geometrically, and each penalized
//! subproblem is solved by an accelerated projected gradient method with a
//! monitor step and Barzilai-Borwein backtracking.
//!
//! Module map:
//! - [`scenario`]: node placement, path loss, shadowing, pilots, `beta`/`gamma`.
//! - [`problem`]: coefficient precomputation, SE, power and EE evaluation.
//! - [`objective`]: penalized objective, closed-form gradient, Lipschitz bound.
//! - [`projection`]: closed-form projection onto the per-AP power balls.
//! - [`solver`]: the outer penalty loop and inner APG loop.
//! - [`oracles`]: brute-force and finite-difference references for testing.

// `!(x > 0.0)` checks reject NaN too; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod matrix;
pub mod objective;
pub mod oracles;
pub mod problem;
pub mod projection;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use objective::{ObjectiveEval, PenaltyParams};
pub use problem::{PowerModel, ProblemData, ThetaVector};
pub use projection::FeasibleSetSpec;
pub use scenario::{Scenario, ScenarioConfig};
pub use solver::{SolverConfig, SolverResult};
