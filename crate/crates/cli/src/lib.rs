//! Experiment harness for the `rpcq` binary: configuration, seeded
//! benchmark runners writing CSV, and the invariant suite.

pub mod check;
pub mod config;
pub mod experiments;

pub use check::{run_check, CheckLine};
pub use config::ExperimentConfig;
pub use experiments::{run_benchmark, run_crescent_demo, run_quadrature, run_sample};
