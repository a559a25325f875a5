//! Evaluation cells, validation-based selection, replication and censoring
//! sweeps.
//!
//! A cell is one (dataset, horizon, method, covariate, split, censoring
//! level, replication) combination. Every predicted point of every rolling
//! window in the cell is pooled into a single [`MetricReport`]. Task results
//! are keyed by task index, so the order in which concurrent completions
//! return never affects a record.

use std::cmp::Ordering as CmpOrdering;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, CompletionBackend, CompletionRequest};
use crate::baselines::{self, BaselineError};
use crate::covariates::{
    censor_covariates_scoped, derive_covariate, CensorScope, CovariateEntry, CovariateError,
    CovariateRef, CovariateSeries, CovariateValue,
};
use crate::metrics::{compute_metrics, Criterion, MetricReport, MetricsError};
use crate::parse::parse_forecast;
use crate::prompt::{render_prompt, PromptError, PromptFormat, PromptSpec, PromptText};
use crate::series::{rolling_origins, uncovered_tail, ForecastTask, SeriesError, SplitSpec, TimeSeries, Timestamp};
use crate::stats::{welch_t_test, StatsError, WelchResult};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Covariate(#[from] CovariateError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("task {task}: {source}")]
    Backend { task: usize, source: BackendError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("all {0} task replies were unparseable")]
    AllTasksFailed(usize),
    #[error("no records to select from")]
    EmptyRecordSet,
    #[error("records are not comparable: {0}")]
    InconsistentRecords(String),
    #[error("unknown covariate column `{0}`")]
    MissingColumn(String),
    #[error("invalid cell: {0}")]
    InvalidCell(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// What produces the forecasts of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Prompt(PromptFormat),
    SeasonalNaive { period: usize },
    Autoregressive { p: usize, d: usize },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Prompt(f) => f.label().to_string(),
            Method::SeasonalNaive { period } => format!("Seasonal naive (m={period})"),
            Method::Autoregressive { p, d } => format!("ARIMA({p},{d},0)"),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Method::Prompt(f) => f.name().to_string(),
            Method::SeasonalNaive { period } => format!("seasonal_naive_{period}"),
            Method::Autoregressive { p, d } => format!("ar_{p}_{d}"),
        }
    }

    pub fn format(&self) -> Option<PromptFormat> {
        match self {
            Method::Prompt(f) => Some(*f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset_id: String,
    pub horizon: usize,
    pub method: Method,
    pub covariate: Option<CovariateRef>,
    pub split: Split,
    pub censoring_level: f64,
    pub replication: u32,
}

impl Eq for CellKey {}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        self.dataset_id
            .cmp(&other.dataset_id)
            .then(self.horizon.cmp(&other.horizon))
            .then(self.censoring_level.total_cmp(&other.censoring_level))
            .then(self.split.cmp(&other.split))
            .then(self.method.cmp(&other.method))
            .then(self.covariate.cmp(&other.covariate))
            .then(self.replication.cmp(&other.replication))
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl CellKey {
    pub fn prompt(
        dataset_id: impl Into<String>,
        horizon: usize,
        format: PromptFormat,
        covariate: Option<CovariateRef>,
        split: Split,
    ) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            horizon,
            method: Method::Prompt(format),
            covariate,
            split,
            censoring_level: 0.0,
            replication: 0,
        }
    }

    /// Same cell with the replication index dropped.
    pub fn without_replication(&self) -> CellKey {
        CellKey {
            replication: 0,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.horizon == 0 {
            return Err(ExperimentError::InvalidCell("horizon must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.censoring_level) {
            return Err(CovariateError::RatioOutOfRange(self.censoring_level).into());
        }
        if !matches!(self.method, Method::Prompt(_)) && self.covariate.is_some() {
            return Err(ExperimentError::InvalidCell(
                "baseline methods take no covariate".into(),
            ));
        }
        Ok(())
    }
}

/// Truth and forecast of one predicted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub task: usize,
    pub timestamp: Timestamp,
    pub truth: f64,
    pub forecast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub key: CellKey,
    pub report: MetricReport,
    /// Seed of this replication, derived from the run seed.
    pub seed: u64,
    pub backend_id: String,
    pub parse_failures: usize,
    pub scheduled_points: usize,
    /// Evaluation-range points no task covered.
    pub uncovered_points: usize,
    pub wall_time_secs: f64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub points: Vec<ForecastPoint>,
}

impl RunRecord {
    /// Copy with the wall-clock field zeroed, for replay comparisons.
    pub fn without_wall_time(&self) -> RunRecord {
        RunRecord {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }
}

/// Series plus everything needed to build its covariates.
#[derive(Debug, Clone)]
pub struct EvalData {
    pub dataset_id: String,
    pub series: TimeSeries,
    pub splits: SplitSpec,
    /// Verbatim categorical columns, one value per series point.
    pub columns: BTreeMap<String, Vec<String>>,
}

impl EvalData {
    pub fn new(dataset_id: impl Into<String>, series: TimeSeries, splits: SplitSpec) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            series,
            splits,
            columns: BTreeMap::new(),
        }
    }

    /// Covariate entries for every history and horizon step of `task`.
    pub fn covariates_for(
        &self,
        task: &ForecastTask,
        source: &CovariateRef,
    ) -> Result<CovariateSeries, ExperimentError> {
        let timestamps = task.all_timestamps();
        match source {
            CovariateRef::Calendar(kind) => Ok(derive_covariate(&timestamps, *kind)),
            CovariateRef::Column(name) => {
                let column = self
                    .columns
                    .get(name)
                    .ok_or_else(|| ExperimentError::MissingColumn(name.clone()))?;
                let points = self.series.points();
                let first = points.partition_point(|p| p.timestamp < timestamps[0]);
                let entries = timestamps
                    .iter()
                    .enumerate()
                    .map(|(i, &timestamp)| CovariateEntry {
                        timestamp,
                        value: CovariateValue::Known(column[first + i].clone()),
                    })
                    .collect();
                Ok(CovariateSeries {
                    source: source.clone(),
                    entries,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Origin stride in points; the horizon when unset.
    pub stride: Option<usize>,
    pub max_history: Option<usize>,
    pub censor_scope: CensorScope,
    pub knowledge_text: Option<String>,
    pub base_seed: u64,
    /// Sampling temperature forwarded with every request.
    pub temperature: Option<f64>,
    /// Fresh completions requested after an unparseable reply.
    pub parse_retries: u32,
    pub parallelism: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            stride: None,
            max_history: None,
            censor_scope: CensorScope::Both,
            knowledge_text: None,
            base_seed: 0,
            temperature: None,
            parse_retries: 1,
            parallelism: 1,
        }
    }
}

/// Log-worthy things that happen while a cell runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TaskEvent {
    Prompt {
        task: usize,
        text: String,
        token_estimate: usize,
    },
    Reply {
        task: usize,
        attempt: u32,
        text: String,
        backend_attempts: u32,
    },
    ParseFailure {
        task: usize,
        attempt: u32,
        reply: String,
        error: String,
    },
}

impl TaskEvent {
    pub fn task(&self) -> usize {
        match self {
            TaskEvent::Prompt { task, .. }
            | TaskEvent::Reply { task, .. }
            | TaskEvent::ParseFailure { task, .. } => *task,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed derivation from a base and a sequence of parts.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(base), |acc, &p| splitmix(acc ^ splitmix(p)))
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed of replication `replication` of a run seeded with `base_seed`.
pub fn replication_seed(base_seed: u64, replication: u32) -> u64 {
    derive_seed(base_seed, &[u64::from(replication)])
}

fn mask_stream(key: &CellKey) -> u64 {
    let cov = key.covariate.as_ref().map(|c| c.name()).unwrap_or_default();
    fnv1a(&format!(
        "mask|{}|{}|{}|{}",
        key.dataset_id,
        key.horizon,
        key.split.name(),
        cov
    ))
}

fn request_stream(key: &CellKey) -> u64 {
    let cov = key.covariate.as_ref().map(|c| c.name()).unwrap_or_default();
    fnv1a(&format!(
        "request|{}|{}|{}|{}|{}",
        key.dataset_id,
        key.horizon,
        key.split.name(),
        key.method.name(),
        cov
    ))
}

/// Rolling-origin tasks of the cell's split.
pub fn cell_tasks(
    key: &CellKey,
    data: &EvalData,
    config: &EvalConfig,
) -> Result<(Vec<ForecastTask>, usize), ExperimentError> {
    let range = match key.split {
        Split::Validation => data.splits.validation,
        Split::Test => data.splits.test,
    };
    let stride = config.stride.unwrap_or(key.horizon);
    let mut tasks = rolling_origins(&data.series, &range, key.horizon, stride)?;
    if let Some(cap) = config.max_history {
        tasks = tasks.into_iter().map(|t| t.with_max_history(cap)).collect();
    }
    let points = data.series.points();
    let start = points.partition_point(|p| p.timestamp < range.start);
    let end = points.partition_point(|p| p.timestamp <= range.end);
    Ok((tasks, uncovered_tail(end - start, key.horizon, stride)))
}

/// Renders the prompt of task `index` of a prompt cell, covariates attached
/// and censored per the cell.
pub fn task_prompt(
    key: &CellKey,
    format: PromptFormat,
    data: &EvalData,
    config: &EvalConfig,
    task: &mut ForecastTask,
    index: usize,
) -> Result<PromptText, ExperimentError> {
    let spec = PromptSpec::new(format, key.covariate.clone(), config.knowledge_text.clone())?;
    let covariates = match &key.covariate {
        None => None,
        Some(source) => {
            let mut cov = data.covariates_for(task, source)?;
            if key.censoring_level > 0.0 {
                let rep_seed = replication_seed(config.base_seed, key.replication);
                let seed = derive_seed(rep_seed, &[mask_stream(key), index as u64]);
                cov = censor_covariates_scoped(
                    &cov,
                    key.censoring_level,
                    seed,
                    config.censor_scope,
                    task.horizon,
                )?;
            }
            task.future_covariates = cov.entries[task.history.len()..]
                .iter()
                .map(|e| e.value.clone())
                .collect();
            Some(cov)
        }
    };
    Ok(render_prompt(&spec, task, covariates.as_ref())?)
}

/// Prompts a prompt cell would send, without calling any backend.
pub fn render_cell_prompts(
    key: &CellKey,
    data: &EvalData,
    config: &EvalConfig,
) -> Result<Vec<PromptText>, ExperimentError> {
    key.validate()?;
    let Method::Prompt(format) = key.method else {
        return Ok(Vec::new());
    };
    let (tasks, _) = cell_tasks(key, data, config)?;
    tasks
        .into_iter()
        .enumerate()
        .map(|(i, mut t)| task_prompt(key, format, data, config, &mut t, i))
        .collect()
}

#[derive(Debug, Default)]
struct TaskOutcome {
    predictions: Option<Vec<f64>>,
    events: Vec<TaskEvent>,
    prompt_tokens: u64,
    completion_tokens: u64,
}

fn run_prompt_task(
    key: &CellKey,
    format: PromptFormat,
    data: &EvalData,
    config: &EvalConfig,
    backend: &dyn CompletionBackend,
    mut task: ForecastTask,
    index: usize,
) -> Result<TaskOutcome, ExperimentError> {
    let prompt = task_prompt(key, format, data, config, &mut task, index)?;
    let mut out = TaskOutcome::default();
    out.events.push(TaskEvent::Prompt {
        task: index,
        text: prompt.text.clone(),
        token_estimate: prompt.token_estimate,
    });
    let rep_seed = replication_seed(config.base_seed, key.replication);
    for attempt in 0..=config.parse_retries {
        let seed = derive_seed(rep_seed, &[request_stream(key), index as u64, u64::from(attempt)]);
        let request = CompletionRequest {
            prompt: &prompt,
            seed,
            temperature: config.temperature,
        };
        let reply = backend
            .complete(&request)
            .map_err(|source| ExperimentError::Backend { task: index, source })?;
        out.prompt_tokens += reply.prompt_tokens;
        out.completion_tokens += reply.completion_tokens;
        out.events.push(TaskEvent::Reply {
            task: index,
            attempt,
            text: reply.text.clone(),
            backend_attempts: reply.attempt_count,
        });
        match parse_forecast(&reply.text, task.horizon) {
            Ok(parsed) => {
                out.predictions = Some(parsed.values);
                break;
            }
            Err(e) => out.events.push(TaskEvent::ParseFailure {
                task: index,
                attempt,
                reply: reply.text,
                error: e.to_string(),
            }),
        }
    }
    Ok(out)
}

fn run_baseline_task(method: Method, task: &ForecastTask) -> Result<TaskOutcome, ExperimentError> {
    let history = task.history.values();
    let predictions = match method {
        Method::SeasonalNaive { period } => baselines::seasonal_naive(&history, period, task.horizon)?,
        Method::Autoregressive { p, d } => {
            let model = baselines::fit_ar_values(&history, p, d)?;
            baselines::ar_forecast_values(&model, &history, task.horizon)?
        }
        Method::Prompt(_) => unreachable!("prompt cells go through the backend"),
    };
    Ok(TaskOutcome {
        predictions: Some(predictions),
        ..Default::default()
    })
}

/// Runs `job` over `0..n` on up to `workers` threads; results come back in
/// index order.
fn run_indexed<T: Send>(
    n: usize,
    workers: usize,
    job: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let result = job(i);
                slots.lock().expect("poisoned")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("poisoned")
        .into_iter()
        .map(|r| r.expect("every index ran"))
        .collect()
}

/// Evaluates one cell and returns its record with the per-task log events
/// ordered by task index.
pub fn evaluate_cell_with_events(
    key: &CellKey,
    data: &EvalData,
    backend: &dyn CompletionBackend,
    config: &EvalConfig,
) -> Result<(RunRecord, Vec<TaskEvent>), ExperimentError> {
    key.validate()?;
    let started = Instant::now();
    let (tasks, uncovered) = cell_tasks(key, data, config)?;
    let workers = match key.method {
        Method::Prompt(_) => config.parallelism.min(backend.max_concurrency()),
        _ => 1,
    };
    let outcomes = run_indexed(tasks.len(), workers, |i| match key.method {
        Method::Prompt(format) => {
            run_prompt_task(key, format, data, config, backend, tasks[i].clone(), i)
        }
        method => run_baseline_task(method, &tasks[i]),
    });

    let mut predictions = Vec::new();
    let mut truths = Vec::new();
    let mut points = Vec::new();
    let mut events = Vec::new();
    let mut parse_failures = 0;
    let (mut prompt_tokens, mut completion_tokens) = (0, 0);
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        let task = &tasks[i];
        events.extend(outcome.events);
        prompt_tokens += outcome.prompt_tokens;
        completion_tokens += outcome.completion_tokens;
        match outcome.predictions {
            Some(pred) => {
                for (k, &forecast) in pred.iter().enumerate() {
                    points.push(ForecastPoint {
                        task: i,
                        timestamp: task.truth_timestamps[k],
                        truth: task.truth[k],
                        forecast,
                    });
                }
                predictions.extend(pred);
                truths.extend_from_slice(&task.truth);
            }
            None => parse_failures += 1,
        }
    }
    if parse_failures == tasks.len() {
        return Err(ExperimentError::AllTasksFailed(tasks.len()));
    }
    if parse_failures > 0 {
        log::warn!(
            "{parse_failures} of {} tasks excluded after unparseable replies",
            tasks.len()
        );
    }
    let report = compute_metrics(&predictions, &truths)?;
    let backend_id = match key.method {
        Method::Prompt(_) => backend.id(),
        _ => "baseline".to_string(),
    };
    let record = RunRecord {
        key: key.clone(),
        report,
        seed: replication_seed(config.base_seed, key.replication),
        backend_id,
        parse_failures,
        scheduled_points: tasks.len() * key.horizon,
        uncovered_points: uncovered,
        wall_time_secs: started.elapsed().as_secs_f64(),
        prompt_tokens,
        completion_tokens,
        points,
    };
    Ok((record, events))
}

pub fn evaluate_cell(
    key: &CellKey,
    data: &EvalData,
    backend: &dyn CompletionBackend,
    config: &EvalConfig,
) -> Result<RunRecord, ExperimentError> {
    evaluate_cell_with_events(key, data, backend, config).map(|(r, _)| r)
}

/// Chosen prompt format and covariate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub format: PromptFormat,
    pub covariate: Option<CovariateRef>,
}

/// Picks the record minimizing `criterion`; ties go to lower MAE, then the
/// format name, then the covariate name.
pub fn select_best(records: &[RunRecord], criterion: Criterion) -> Result<Selection, ExperimentError> {
    let first = records.first().ok_or(ExperimentError::EmptyRecordSet)?;
    for r in records {
        let k = &r.key;
        let problem = if k.dataset_id != first.key.dataset_id {
            Some("mixed datasets")
        } else if k.horizon != first.key.horizon {
            Some("mixed horizons")
        } else if k.split != Split::Validation {
            Some("selection uses validation records only")
        } else if k.censoring_level != 0.0 {
            Some("censored records cannot drive selection")
        } else if k.replication != 0 {
            Some("selection uses replication 0 only")
        } else if k.method.format().is_none() {
            Some("baseline records cannot be selected")
        } else {
            None
        };
        if let Some(p) = problem {
            return Err(ExperimentError::InconsistentRecords(p.into()));
        }
    }
    let rank = |r: &RunRecord| {
        (
            r.report.get(criterion),
            r.report.mae,
            r.key.method.format().map(|f| f.name()).unwrap_or_default(),
            r.key.covariate.as_ref().map(|c| c.name()).unwrap_or_default(),
        )
    };
    let best = records
        .iter()
        .min_by(|a, b| {
            let (ca, ma, fa, va) = rank(a);
            let (cb, mb, fb, vb) = rank(b);
            ca.total_cmp(&cb)
                .then(ma.total_cmp(&mb))
                .then(fa.cmp(fb))
                .then(va.cmp(&vb))
        })
        .expect("nonempty");
    Ok(Selection {
        format: best.key.method.format().expect("checked above"),
        covariate: best.key.covariate.clone(),
    })
}

/// Evaluates `n` replications of a cell; replication `r` gets its own seed
/// for both the backend and the censoring mask.
pub fn replicate_cell(
    key: &CellKey,
    n_replications: u32,
    data: &EvalData,
    backend: &dyn CompletionBackend,
    config: &EvalConfig,
) -> Result<Vec<RunRecord>, ExperimentError> {
    (0..n_replications)
        .map(|r| {
            let key = CellKey {
                replication: r,
                ..key.clone()
            };
            evaluate_cell(&key, data, backend, config)
        })
        .collect()
}

/// One record per (seed, level). The seed index becomes the replication
/// index of the record key.
pub fn censoring_sweep(
    template: &CellKey,
    levels: &[f64],
    seeds: &[u64],
    data: &EvalData,
    backend: &dyn CompletionBackend,
    config: &EvalConfig,
) -> Result<Vec<RunRecord>, ExperimentError> {
    if let Some(&bad) = levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(CovariateError::RatioOutOfRange(bad).into());
    }
    let mut out = Vec::with_capacity(levels.len() * seeds.len());
    for (i, &seed) in seeds.iter().enumerate() {
        let config = EvalConfig {
            base_seed: seed,
            ..config.clone()
        };
        for &level in levels {
            let key = CellKey {
                censoring_level: level,
                replication: i as u32,
                ..template.clone()
            };
            out.push(evaluate_cell(&key, data, backend, &config)?);
        }
    }
    Ok(out)
}

/// Welch test between per-replication values of `criterion`.
pub fn compare_replications(
    a: &[RunRecord],
    b: &[RunRecord],
    criterion: Criterion,
) -> Result<WelchResult, ExperimentError> {
    let values = |rs: &[RunRecord]| rs.iter().map(|r| r.report.get(criterion)).collect::<Vec<_>>();
    Ok(welch_t_test(&values(a), &values(b))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{OracleBackend, ScriptedBackend};
    use crate::covariates::CovariateKind;
    use crate::metrics::MetricReport;
    use crate::series::{DateRange, Frequency};
    use chrono::{TimeZone, Utc};

    fn record(format: PromptFormat, kind: CovariateKind, rmse: f64, mae: f64) -> RunRecord {
        RunRecord {
            key: CellKey::prompt("d", 7, format, Some(CovariateRef::Calendar(kind)), Split::Validation),
            report: MetricReport {
                rmse,
                mae,
                mape_percent: Some(1.0),
                n_points: 1,
                n_skipped_zero_truth: 0,
            },
            seed: 0,
            backend_id: "x".into(),
            parse_failures: 0,
            scheduled_points: 1,
            uncovered_points: 0,
            wall_time_secs: 0.0,
            prompt_tokens: 0,
            completion_tokens: 0,
            points: vec![],
        }
    }

    #[test]
    fn single_record_selection() {
        let r = record(PromptFormat::Decoupled, CovariateKind::Date, 3.0, 2.0);
        let s = select_best(&[r], Criterion::Rmse).unwrap();
        assert_eq!(s.format, PromptFormat::Decoupled);
    }

    #[test]
    fn rmse_tie_goes_to_lower_mae() {
        let a = record(PromptFormat::Coupled, CovariateKind::Date, 5.0, 4.0);
        let b = record(PromptFormat::Decoupled, CovariateKind::Month, 5.0, 3.0);
        let s = select_best(&[a, b], Criterion::Rmse).unwrap();
        assert_eq!(
            s,
            Selection {
                format: PromptFormat::Decoupled,
                covariate: Some(CovariateRef::Calendar(CovariateKind::Month))
            }
        );
    }

    #[test]
    fn full_tie_goes_to_format_then_covariate_name() {
        let a = record(PromptFormat::Decoupled, CovariateKind::Date, 5.0, 4.0);
        let b = record(PromptFormat::Coupled, CovariateKind::Year, 5.0, 4.0);
        let c = record(PromptFormat::Coupled, CovariateKind::Month, 5.0, 4.0);
        let s = select_best(&[a, b, c], Criterion::Rmse).unwrap();
        assert_eq!(s.format, PromptFormat::Coupled);
        assert_eq!(s.covariate, Some(CovariateRef::Calendar(CovariateKind::Month)));
    }

    #[test]
    fn selection_preconditions() {
        assert!(matches!(
            select_best(&[], Criterion::Rmse),
            Err(ExperimentError::EmptyRecordSet)
        ));
        let mut r = record(PromptFormat::Coupled, CovariateKind::Date, 1.0, 1.0);
        r.key.split = Split::Test;
        assert!(matches!(
            select_best(&[r], Criterion::Rmse),
            Err(ExperimentError::InconsistentRecords(_))
        ));
    }

    fn daily_data(values: &[f64], val_len: usize, test_len: usize) -> EvalData {
        let start = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let series = TimeSeries::from_values(start, Frequency::Daily, values).unwrap();
        let n = values.len();
        let ts = |i: usize| series.points()[i].timestamp;
        let splits = SplitSpec {
            validation: DateRange::new(ts(n - val_len - test_len), ts(n - test_len - 1)),
            test: DateRange::new(ts(n - test_len), ts(n - 1)),
        };
        EvalData::new("toy", series, splits)
    }

    #[test]
    fn scripted_truth_replay_scores_zero() {
        let values: Vec<f64> = (0..30).map(|i| (i * 3 % 7) as f64).collect();
        let data = daily_data(&values, 5, 6);
        let key = CellKey::prompt("toy", 2, PromptFormat::NoCovariate, None, Split::Test);
        let replies: Vec<String> = values[24..]
            .chunks(2)
            .map(crate::parse::render_list)
            .collect();
        let backend = ScriptedBackend::new(replies);
        let r = evaluate_cell(&key, &data, &backend, &EvalConfig::default()).unwrap();
        assert_eq!(r.report.mae, 0.0);
        assert_eq!(r.scheduled_points, 6);
    }

    #[test]
    fn unparseable_replies_retry_then_exclude() {
        let values: Vec<f64> = (0..20).map(f64::from).collect();
        let data = daily_data(&values, 2, 4);
        let key = CellKey::prompt("toy", 2, PromptFormat::NoCovariate, None, Split::Test);
        // task 0: garbage then a valid list; task 1: garbage twice.
        let backend = ScriptedBackend::new(["no idea", "[16, 17]", "hmm", "still no"]);
        let (r, events) =
            evaluate_cell_with_events(&key, &data, &backend, &EvalConfig::default()).unwrap();
        assert_eq!(r.parse_failures, 1);
        assert_eq!(r.report.n_points + key.horizon * r.parse_failures, r.scheduled_points);
        assert_eq!(r.report.mae, 0.0);
        let failures = events
            .iter()
            .filter(|e| matches!(e, TaskEvent::ParseFailure { .. }))
            .count();
        assert_eq!(failures, 3);

        let backend = ScriptedBackend::new(["x", "y", "z", "w"]);
        assert!(matches!(
            evaluate_cell(&key, &data, &backend, &EvalConfig::default()),
            Err(ExperimentError::AllTasksFailed(2))
        ));
    }

    #[test]
    fn exhausted_script_is_a_backend_error() {
        let values: Vec<f64> = (0..20).map(f64::from).collect();
        let data = daily_data(&values, 2, 4);
        let key = CellKey::prompt("toy", 2, PromptFormat::NoCovariate, None, Split::Test);
        let backend = ScriptedBackend::new(["[1, 2]"]);
        assert!(matches!(
            evaluate_cell(&key, &data, &backend, &EvalConfig::default()),
            Err(ExperimentError::Backend { task: 1, .. })
        ));
    }

    #[test]
    fn parallel_and_serial_agree() {
        let values: Vec<f64> = (0..80).map(|i| ((i * 7) % 11) as f64 + 0.5).collect();
        let data = daily_data(&values, 14, 14);
        let key = CellKey::prompt(
            "toy",
            2,
            PromptFormat::Coupled,
            Some(CovariateRef::Calendar(CovariateKind::DayOfWeek)),
            Split::Validation,
        );
        let serial = evaluate_cell(&key, &data, &OracleBackend::new(), &EvalConfig::default()).unwrap();
        let config = EvalConfig {
            parallelism: 8,
            ..Default::default()
        };
        let parallel = evaluate_cell(&key, &data, &OracleBackend::new(), &config).unwrap();
        assert_eq!(serial.without_wall_time(), parallel.without_wall_time());
    }

    #[test]
    fn baseline_cells() {
        let values: Vec<f64> = (0..40).map(|i| [3.0, 5.0, 9.0, 4.0][i % 4]).collect();
        let data = daily_data(&values, 8, 8);
        let key = CellKey {
            method: Method::SeasonalNaive { period: 4 },
            ..CellKey::prompt("toy", 4, PromptFormat::NoCovariate, None, Split::Test)
        };
        let r = evaluate_cell(&key, &data, &OracleBackend::new(), &EvalConfig::default()).unwrap();
        assert_eq!(r.report.mae, 0.0);
        assert_eq!(r.backend_id, "baseline");

        let bad = CellKey {
            covariate: Some(CovariateRef::Calendar(CovariateKind::Date)),
            ..key
        };
        assert!(evaluate_cell(&bad, &data, &OracleBackend::new(), &EvalConfig::default()).is_err());
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(replication_seed(7, 0), replication_seed(7, 1));
    }
}
