//! Declarative experiment configuration (TOML).

use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime, TimeZone, Utc};
use covacast_core::backend::{BackendConfig, NoisyOracleBackend, OpenAiBackend, OracleBackend};
use covacast_core::covariates::CensorScope;
use covacast_core::experiment::{EvalConfig, Method};
use covacast_core::series::Timestamp;
use covacast_core::{
    BackendError, CompletionBackend, CovariateRef, Criterion, DateRange, Frequency, PromptFormat,
    SplitSpec,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("bad timestamp `{0}`")]
    Timestamp(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    None,
    /// Sum all rows of a calendar day into one daily point.
    DailySum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub id: String,
    pub path: PathBuf,
    pub timestamp_column: String,
    pub value_column: String,
    /// Frequency after aggregation.
    pub frequency: Frequency,
    #[serde(default)]
    pub extra_covariate_columns: Vec<String>,
    #[serde(default)]
    pub aggregate: Aggregation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: String,
    pub end: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitsConfig {
    pub validation: RangeConfig,
    pub test: RangeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendChoice {
    Oracle,
    NoisyOracle { noise_std: f64 },
    Openai(BackendConfig),
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Oracle
    }
}

impl BackendChoice {
    pub fn is_offline(&self) -> bool {
        !matches!(self, BackendChoice::Openai(_))
    }

    pub fn build(&self) -> Result<Box<dyn CompletionBackend>, ConfigError> {
        Ok(match self {
            BackendChoice::Oracle => Box::new(OracleBackend::new()),
            BackendChoice::NoisyOracle { noise_std } => Box::new(NoisyOracleBackend::new(*noise_std)?),
            BackendChoice::Openai(config) => Box::new(OpenAiBackend::from_env(config.clone())?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineConfig {
    SeasonalNaive { period: usize },
    Ar { p: usize, d: usize },
}

impl BaselineConfig {
    pub fn method(self) -> Method {
        match self {
            BaselineConfig::SeasonalNaive { period } => Method::SeasonalNaive { period },
            BaselineConfig::Ar { p, d } => Method::Autoregressive { p, d },
        }
    }
}

fn default_criterion() -> Criterion {
    Criterion::Rmse
}
fn default_replications() -> u32 {
    1
}
fn default_replication_temperature() -> f64 {
    1.0
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("covacast-out")
}
fn default_parallelism() -> usize {
    4
}
fn default_parse_retries() -> u32 {
    1
}
fn default_censoring_seeds() -> u32 {
    1
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub splits: SplitsConfig,
    pub horizons: Vec<usize>,
    pub formats: Vec<PromptFormat>,
    #[serde(default)]
    pub covariates: Vec<CovariateRef>,
    #[serde(default)]
    pub knowledge_text: Option<String>,
    #[serde(default = "default_criterion")]
    pub selection_criterion: Criterion,
    /// Formats run on the test split next to the selected pair. Formats that
    /// need a covariate use the selected one.
    #[serde(default)]
    pub comparators: Vec<PromptFormat>,
    #[serde(default)]
    pub baselines: Vec<BaselineConfig>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub selection_temperature: f64,
    #[serde(default = "default_replication_temperature")]
    pub replication_temperature: f64,
    #[serde(default)]
    pub censoring_levels: Vec<f64>,
    #[serde(default = "default_censoring_seeds")]
    pub censoring_seeds: u32,
    #[serde(default)]
    pub censor_scope: CensorScope,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default)]
    pub max_history: Option<usize>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_parse_retries")]
    pub parse_retries: u32,
    #[serde(default = "default_true")]
    pub log_prompts: bool,
}

/// Parses `2024-01-31`, `2024-01` (first of month) or a full ISO-8601
/// date-time; naive values are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(t) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(Utc.from_utc_datetime(&t));
        }
    }
    let date = NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d"))
        .ok()?;
    Some(Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0)?))
}

impl RangeConfig {
    pub fn to_range(&self) -> Result<DateRange, ConfigError> {
        let ts = |s: &str| parse_timestamp(s).ok_or_else(|| ConfigError::Timestamp(s.to_string()));
        Ok(DateRange::new(ts(&self.start)?, ts(&self.end)?))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads and validates a config file; relative paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if self.dataset.path.is_relative() {
            self.dataset.path = base.join(&self.dataset.path);
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn split_spec(&self) -> Result<SplitSpec, ConfigError> {
        Ok(SplitSpec {
            validation: self.splits.validation.to_range()?,
            test: self.splits.test.to_range()?,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizons.is_empty() {
            return invalid("horizons must not be empty");
        }
        if self.horizons.contains(&0) {
            return invalid("horizons must be positive");
        }
        if self.formats.is_empty() {
            return invalid("formats must not be empty");
        }
        if self.replications == 0 {
            return invalid("replications must be at least 1");
        }
        if self.censoring_seeds == 0 {
            return invalid("censoring_seeds must be at least 1");
        }
        if self.parallelism == 0 {
            return invalid("parallelism must be at least 1");
        }
        if self.stride == Some(0) {
            return invalid("stride must be positive");
        }
        let needs_covariate = self.formats.iter().any(|f| f.requires_covariate());
        if needs_covariate && self.covariates.is_empty() {
            return invalid("covariate formats are configured but no covariates are");
        }
        let uses_knowledge = self
            .formats
            .iter()
            .chain(&self.comparators)
            .any(|f| *f == PromptFormat::KnowledgeGuided);
        if uses_knowledge && self.knowledge_text.as_deref().is_none_or(|t| t.trim().is_empty()) {
            return invalid("knowledge_guided needs knowledge_text");
        }
        if let Some(&l) = self.censoring_levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return invalid(format!("censoring level {l} outside [0, 1]"));
        }
        for t in [self.selection_temperature, self.replication_temperature] {
            if !(t.is_finite() && t >= 0.0) {
                return invalid("temperatures must be finite and >= 0");
            }
        }
        for c in &self.covariates {
            if let CovariateRef::Column(name) = c {
                if !self.dataset.extra_covariate_columns.contains(name) {
                    return invalid(format!(
                        "covariate column `{name}` is not listed in extra_covariate_columns"
                    ));
                }
            }
        }
        if let BackendChoice::Openai(b) = &self.backend {
            b.validate()?;
        }
        if let BackendChoice::NoisyOracle { noise_std } = self.backend {
            if !(noise_std.is_finite() && noise_std >= 0.0) {
                return invalid("noise_std must be finite and >= 0");
            }
        }
        let spec = self.split_spec()?;
        if spec.validation.start > spec.validation.end || spec.test.start > spec.test.end {
            return invalid("split ranges must have start <= end");
        }
        if spec.validation.end >= spec.test.start {
            return invalid("validation range must end before the test range starts");
        }
        Ok(())
    }

    /// Task-level evaluation settings for the selection stage.
    pub fn eval_config(&self) -> EvalConfig {
        let parallelism = match &self.backend {
            BackendChoice::Openai(b) => b.parallelism_limit,
            _ => self.parallelism,
        };
        EvalConfig {
            stride: self.stride,
            max_history: self.max_history,
            censor_scope: self.censor_scope,
            knowledge_text: self.knowledge_text.clone(),
            base_seed: self.seed,
            temperature: Some(self.selection_temperature),
            parse_retries: self.parse_retries,
            parallelism,
        }
    }
}
