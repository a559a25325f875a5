//! Config-driven runner for covariate prompt forecasting experiments:
//! CSV ingestion, experiment execution, JSONL run logs and report rendering.

pub mod config;
pub mod ingest;
pub mod report;
pub mod runlog;
pub mod runner;

pub use config::ExperimentConfig;
pub use report::{render_report, ReportStyle};
pub use runner::{run_experiment, RunOptions, RunOutcome};
