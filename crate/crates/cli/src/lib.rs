//! Experiment drivers and report types behind the `mmls` binary.
//!
//! The binary is a thin argument parser; everything it runs lives here so
//! integration tests can call the same entry points and inspect structured
//! results instead of scraping stdout.

pub mod experiments;
pub mod report;

pub use experiments::{
    run_convergence, run_distance_table, ConvergenceParams, DistanceTableParams, Manifold,
};
pub use report::{
    log_log_slope, ConvergenceLevel, ConvergenceReport, ExperimentReport, PairRecord,
};
