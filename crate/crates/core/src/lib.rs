//! Forecasting harness that serializes time series and calendar covariates
//! into text prompts, sends them to a completion backend, parses the numeric
//! replies and scores them with rolling-origin evaluation.

pub mod backend;
pub mod baselines;
pub mod covariates;
pub mod experiment;
pub mod metrics;
pub mod parse;
pub mod prompt;
pub mod series;
pub mod stats;

pub use backend::{BackendConfig, BackendError, CompletionBackend, CompletionRequest, CompletionResult};
pub use covariates::{CovariateKind, CovariateRef, CovariateSeries, CovariateValue};
pub use experiment::{CellKey, EvalConfig, EvalData, ExperimentError, Method, RunRecord, Split};
pub use metrics::{Criterion, MetricReport};
pub use prompt::{PromptFormat, PromptSpec, PromptText};
pub use series::{DateRange, Frequency, ForecastTask, SplitSpec, TimeSeries};
