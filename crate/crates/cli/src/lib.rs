//! Batch front end: configuration, single runs and amplitude sweeps.

pub mod config;
pub mod runner;
pub mod sweep;

pub use config::RunConfig;
pub use runner::{execute, RunStatus, RunSummary};
