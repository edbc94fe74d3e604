//! Experiment runner around the `cellfree-apg` solver: scenario batches,
//! parameter sweeps and plot-ready CSV/JSON outputs.

pub mod check;
pub mod error;
pub mod output;
pub mod run;
pub mod spec;

pub use error::{CliError, CliResult};
pub use run::{run_experiment, run_single, Replay};
pub use spec::{derive_seed, ExperimentSpec, SweepPoint};
