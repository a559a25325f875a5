//! Runs a configured experiment end to end and writes its run log.
//!
//! Stages per horizon: validation cells for every (format, covariate) pair,
//! selection, test cells for the selected pair and comparators, baseline
//! cells, optional replications with Welch tests, optional censoring sweeps.

use std::path::PathBuf;

use covacast_core::experiment::{
    compare_replications, derive_seed, evaluate_cell_with_events, render_cell_prompts,
    replicate_cell, censoring_sweep, select_best, CellKey, EvalConfig, EvalData, ExperimentError,
    Method, RunRecord, Selection, Split,
};
use covacast_core::{CompletionBackend, CovariateRef, Criterion, PromptFormat};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::ingest::{load_dataset, IngestError};
use crate::runlog::{LogBody, RunLogError, RunLogWriter, TTestEntry};

pub const RUN_LOG_FILE: &str = "runlog.jsonl";
pub const DRY_RUN_LOG_FILE: &str = "prompts.jsonl";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    RunLog(#[from] RunLogError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Render and log prompts only; no backend is built or called.
    pub dry_run: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub log_path: PathBuf,
    pub records: Vec<RunRecord>,
    pub selections: Vec<(usize, Selection)>,
    pub cell_failures: usize,
    pub prompts_rendered: usize,
}

impl RunOutcome {
    /// 0 on full success, 2 when some cells failed.
    pub fn exit_code(&self) -> i32 {
        if self.cell_failures == 0 {
            0
        } else {
            2
        }
    }
}

pub fn load_eval_data(config: &ExperimentConfig) -> Result<EvalData, RunError> {
    let loaded = load_dataset(&config.dataset)?;
    Ok(EvalData {
        dataset_id: config.dataset.id.clone(),
        series: loaded.series,
        splits: config.split_spec()?,
        columns: loaded.columns,
    })
}

/// Every (format, covariate) pair evaluated on validation.
pub fn candidate_pairs(config: &ExperimentConfig) -> Vec<(PromptFormat, Option<CovariateRef>)> {
    let mut pairs = Vec::new();
    for &format in &config.formats {
        if format.requires_covariate() {
            pairs.extend(config.covariates.iter().map(|c| (format, Some(c.clone()))));
        } else {
            pairs.push((format, None));
        }
    }
    pairs
}

fn comparator_pairs(
    config: &ExperimentConfig,
    selected: &Selection,
) -> Vec<(PromptFormat, Option<CovariateRef>)> {
    let mut pairs: Vec<(PromptFormat, Option<CovariateRef>)> = Vec::new();
    for &format in &config.comparators {
        let covariate = if format.requires_covariate() {
            match &selected.covariate {
                Some(c) => Some(c.clone()),
                None => {
                    log::warn!("comparator {format} skipped: the selected pair has no covariate");
                    continue;
                }
            }
        } else {
            None
        };
        let pair = (format, covariate);
        if pair != (selected.format, selected.covariate.clone()) && !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    pairs
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    data: EvalData,
    backend: &'a dyn CompletionBackend,
    eval: EvalConfig,
    log: RunLogWriter,
    outcome: RunOutcome,
}

impl Runner<'_> {
    fn key(&self, horizon: usize, method: Method, covariate: Option<CovariateRef>, split: Split) -> CellKey {
        CellKey {
            dataset_id: self.data.dataset_id.clone(),
            horizon,
            method,
            covariate,
            split,
            censoring_level: 0.0,
            replication: 0,
        }
    }

    fn failure(&mut self, cell: &CellKey, error: ExperimentError) -> Result<(), RunError> {
        log::error!("cell {} h={} {}: {error}", cell.method.name(), cell.horizon, cell.split.name());
        self.outcome.cell_failures += 1;
        self.log.append(LogBody::CellFailure {
            cell: cell.clone(),
            error: error.to_string(),
        })?;
        Ok(())
    }

    fn cell(&mut self, key: &CellKey) -> Result<Option<RunRecord>, RunError> {
        match evaluate_cell_with_events(key, &self.data, self.backend, &self.eval) {
            Ok((record, events)) => {
                if self.config.log_prompts {
                    for event in events {
                        self.log.append(LogBody::from_event(key, event))?;
                    }
                }
                self.log.append(LogBody::RunRecord {
                    record: Box::new(record.clone()),
                })?;
                self.outcome.records.push(record.clone());
                Ok(Some(record))
            }
            Err(e) => {
                self.failure(key, e)?;
                Ok(None)
            }
        }
    }

    fn horizon(&mut self, h: usize) -> Result<(), RunError> {
        let mut validation = Vec::new();
        for (format, covariate) in candidate_pairs(self.config) {
            let key = self.key(h, Method::Prompt(format), covariate, Split::Validation);
            if let Some(r) = self.cell(&key)? {
                validation.push(r);
            }
        }
        for baseline in &self.config.baselines {
            for split in [Split::Validation, Split::Test] {
                let key = self.key(h, baseline.method(), None, split);
                self.cell(&key)?;
            }
        }
        if validation.is_empty() {
            log::error!("horizon {h}: no validation cell succeeded; skipping selection");
            return Ok(());
        }
        let criterion = self.config.selection_criterion;
        let selected = select_best(&validation, criterion)?;
        self.log.append(LogBody::Selection {
            dataset_id: self.data.dataset_id.clone(),
            horizon: h,
            criterion,
            format: selected.format,
            covariate: selected.covariate.clone(),
        })?;
        self.outcome.selections.push((h, selected.clone()));

        let mut compared = vec![(selected.format, selected.covariate.clone())];
        compared.extend(comparator_pairs(self.config, &selected));
        for (format, covariate) in &compared {
            let key = self.key(h, Method::Prompt(*format), covariate.clone(), Split::Test);
            self.cell(&key)?;
        }

        if self.config.replications >= 2 {
            self.replications(h, &compared)?;
        }
        if selected.covariate.is_some() && !self.config.censoring_levels.is_empty() {
            self.censoring(h, &selected)?;
        }
        Ok(())
    }

    fn replications(
        &mut self,
        h: usize,
        compared: &[(PromptFormat, Option<CovariateRef>)],
    ) -> Result<(), RunError> {
        let config = EvalConfig {
            temperature: Some(self.config.replication_temperature),
            ..self.eval.clone()
        };
        for split in [Split::Validation, Split::Test] {
            let mut samples: Vec<(String, Vec<RunRecord>)> = Vec::new();
            for (format, covariate) in compared {
                let key = self.key(h, Method::Prompt(*format), covariate.clone(), split);
                match replicate_cell(&key, self.config.replications, &self.data, self.backend, &config) {
                    Ok(records) => {
                        for r in &records {
                            self.log.append(LogBody::Replication {
                                record: Box::new(r.clone()),
                            })?;
                        }
                        let label = pair_label(*format, covariate.as_ref());
                        samples.push((label, records));
                    }
                    Err(e) => {
                        if samples.is_empty() {
                            // Without the selected pair there is nothing to compare against.
                            return self.failure(&key, e);
                        }
                        self.failure(&key, e)?;
                    }
                }
            }
            let Some(((best_label, best), others)) = samples.split_first() else {
                continue;
            };
            for (label, other) in others {
                for criterion in [Criterion::Rmse, Criterion::Mae, Criterion::Mape] {
                    match compare_replications(best, other, criterion) {
                        Ok(w) => self.log.append(LogBody::TTest(TTestEntry {
                            dataset_id: self.data.dataset_id.clone(),
                            horizon: h,
                            split,
                            criterion,
                            best: best_label.clone(),
                            other: label.clone(),
                            t: w.t.is_finite().then_some(w.t),
                            df: w.df,
                            p_two_sided: w.p_two_sided,
                            degenerate: w.degenerate,
                            n_best: best.len(),
                            n_other: other.len(),
                        }))?,
                        Err(e) => log::warn!("t-test {best_label} vs {label} ({criterion:?}) skipped: {e}"),
                    }
                }
            }
        }
        Ok(())
    }

    fn censoring(&mut self, h: usize, selected: &Selection) -> Result<(), RunError> {
        let levels: Vec<f64> = self
            .config
            .censoring_levels
            .iter()
            .copied()
            .filter(|&l| l > 0.0)
            .collect();
        let seeds: Vec<u64> = (0..self.config.censoring_seeds)
            .map(|i| match i {
                0 => self.config.seed,
                i => derive_seed(self.config.seed, &[u64::from(i)]),
            })
            .collect();
        for split in [Split::Validation, Split::Test] {
            let template = self.key(h, Method::Prompt(selected.format), selected.covariate.clone(), split);
            match censoring_sweep(&template, &levels, &seeds, &self.data, self.backend, &self.eval) {
                Ok(records) => {
                    for r in records {
                        self.log.append(LogBody::RunRecord {
                            record: Box::new(r.clone()),
                        })?;
                        self.outcome.records.push(r);
                    }
                }
                Err(e) => self.failure(&template, e)?,
            }
        }
        Ok(())
    }
}

pub fn pair_label(format: PromptFormat, covariate: Option<&CovariateRef>) -> String {
    match covariate {
        Some(c) => format!("{} / {}", format.label(), c.label()),
        None => format.label().to_string(),
    }
}

/// Builds the configured backend and runs the experiment.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<RunOutcome, RunError> {
    config.validate()?;
    if options.dry_run {
        return render_prompts(config);
    }
    let backend = config.backend.build()?;
    run_with_backend(config, backend.as_ref())
}

pub fn run_with_backend(
    config: &ExperimentConfig,
    backend: &dyn CompletionBackend,
) -> Result<RunOutcome, RunError> {
    let data = load_eval_data(config)?;
    covacast_core::series::split_series(&data.series, &data.splits)
        .map_err(ExperimentError::from)?;
    let log_path = config.output_dir.join(RUN_LOG_FILE);
    let mut log = RunLogWriter::create(&log_path, config.seed)?;
    log.append(LogBody::Config {
        config: Box::new(config.clone()),
        backend_id: backend.id(),
        dry_run: false,
    })?;
    let mut runner = Runner {
        config,
        data,
        backend,
        eval: config.eval_config(),
        log,
        outcome: RunOutcome {
            log_path,
            ..Default::default()
        },
    };
    for &h in &config.horizons {
        runner.horizon(h)?;
    }
    Ok(runner.outcome)
}

/// Renders every validation and test prompt into the dry-run log without
/// touching a backend.
pub fn render_prompts(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let data = load_eval_data(config)?;
    let log_path = config.output_dir.join(DRY_RUN_LOG_FILE);
    let mut log = RunLogWriter::create(&log_path, config.seed)?;
    log.append(LogBody::Config {
        config: Box::new(config.clone()),
        backend_id: "none".into(),
        dry_run: true,
    })?;
    let eval = config.eval_config();
    let mut outcome = RunOutcome {
        log_path,
        ..Default::default()
    };
    for &h in &config.horizons {
        for (format, covariate) in candidate_pairs(config) {
            for split in [Split::Validation, Split::Test] {
                let key = CellKey::prompt(&data.dataset_id, h, format, covariate.clone(), split);
                match render_cell_prompts(&key, &data, &eval) {
                    Ok(prompts) => {
                        for (task, p) in prompts.into_iter().enumerate() {
                            log.append(LogBody::Prompt {
                                cell: key.clone(),
                                task,
                                text: p.text,
                                token_estimate: p.token_estimate,
                            })?;
                            outcome.prompts_rendered += 1;
                        }
                    }
                    Err(e) => {
                        outcome.cell_failures += 1;
                        log.append(LogBody::CellFailure {
                            cell: key,
                            error: e.to_string(),
                        })?;
                    }
                }
            }
        }
    }
    Ok(outcome)
}
