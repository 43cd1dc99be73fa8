//! Experiment harness for `jip-core`: configuration, single runs, grid
//! searches, ablations and machine-readable reports.

pub mod config;
mod error;
pub mod harness;
pub mod report;

pub use config::{ExperimentConfig, ReportFormat};
pub use error::{HarnessError, Result};
pub use harness::{ablation, grid_search, run_single};
pub use report::{RunRecord, RunReport, Summary};
