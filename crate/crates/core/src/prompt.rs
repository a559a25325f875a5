//! Prompt rendering for the six supported prompt formats.
//!
//! Rendering is pure and byte-stable: values go through [`format_value`],
//! list items are joined with `", "`, and the only line breaks are the blank
//! line that separates the Coupled data stream from its instruction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covariates::{CovariateRef, CovariateSeries};
use crate::series::ForecastTask;

const CONTEXT_PARAGRAPH: &str = "The sequence represents a univariate time series with aligned \
covariates. These covariates exhibit recurring patterns (e.g., weekly or seasonal cycles) that \
influence the behavior of the series. Use both the observed values and the structure of the \
covariates to identify trends.";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("prompt format {0} requires covariates")]
    MissingCovariates(PromptFormat),
    #[error("covariates misaligned with task: {0}")]
    CovariateMisaligned(String),
    #[error("knowledge-guided prompt requires nonempty knowledge text")]
    MissingKnowledgeText,
    #[error("the no-covariate prompt cannot carry a covariate")]
    UnexpectedCovariate,
    #[error("non-finite value {0}")]
    NonFiniteValue(f64),
    #[error("unknown prompt format `{0}`")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptFormat {
    NoCovariate,
    Coupled,
    Decoupled,
    Contextualized,
    PromptCast,
    KnowledgeGuided,
}

impl PromptFormat {
    pub const ALL: [PromptFormat; 6] = [
        PromptFormat::NoCovariate,
        PromptFormat::Coupled,
        PromptFormat::Decoupled,
        PromptFormat::Contextualized,
        PromptFormat::PromptCast,
        PromptFormat::KnowledgeGuided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptFormat::NoCovariate => "no_covariate",
            PromptFormat::Coupled => "coupled",
            PromptFormat::Decoupled => "decoupled",
            PromptFormat::Contextualized => "contextualized",
            PromptFormat::PromptCast => "prompt_cast",
            PromptFormat::KnowledgeGuided => "knowledge_guided",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PromptFormat::NoCovariate => "No-Covariate",
            PromptFormat::Coupled => "Coupled",
            PromptFormat::Decoupled => "Decoupled",
            PromptFormat::Contextualized => "Contextualized",
            PromptFormat::PromptCast => "PromptCast",
            PromptFormat::KnowledgeGuided => "Knowledge-Guided",
        }
    }

    /// Formats whose template has no meaning without a covariate.
    pub fn requires_covariate(self) -> bool {
        matches!(
            self,
            PromptFormat::Coupled
                | PromptFormat::Decoupled
                | PromptFormat::Contextualized
                | PromptFormat::KnowledgeGuided
        )
    }
}

impl fmt::Display for PromptFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptFormat {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptFormat::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| PromptError::UnknownFormat(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub format: PromptFormat,
    pub covariate: Option<CovariateRef>,
    pub knowledge_text: Option<String>,
}

impl PromptSpec {
    pub fn new(
        format: PromptFormat,
        covariate: Option<CovariateRef>,
        knowledge_text: Option<String>,
    ) -> Result<Self, PromptError> {
        let spec = Self {
            format,
            covariate,
            knowledge_text,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        match self.format {
            PromptFormat::NoCovariate if self.covariate.is_some() => {
                Err(PromptError::UnexpectedCovariate)
            }
            PromptFormat::KnowledgeGuided
                if self
                    .knowledge_text
                    .as_deref()
                    .is_none_or(|t| t.trim().is_empty()) =>
            {
                Err(PromptError::MissingKnowledgeText)
            }
            f if f.requires_covariate() && self.covariate.is_none() => {
                Err(PromptError::MissingCovariates(f))
            }
            _ => Ok(()),
        }
    }
}

/// Exact text sent to a backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub text: String,
    pub token_estimate: usize,
}

impl PromptText {
    pub fn new(text: String) -> Self {
        let token_estimate = token_estimate(&text);
        Self {
            text,
            token_estimate,
        }
    }
}

/// Token proxy: every run of alphanumeric characters counts as one token and
/// every other non-whitespace character counts as one.
pub fn token_estimate(text: &str) -> usize {
    let mut count = 0;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_alphanumeric() {
            if !in_word {
                count += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if !c.is_whitespace() {
                count += 1;
            }
        }
    }
    count
}

/// Number of whitespace-delimited tokens.
pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Renders a finite number: integers without a decimal point, other values
/// rounded to six fractional digits with trailing zeros trimmed.
pub fn format_value(x: f64) -> Result<String, PromptError> {
    if !x.is_finite() {
        return Err(PromptError::NonFiniteValue(x));
    }
    let mut s = if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        let s = format!("{x:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    };
    if s == "-0" {
        s = "0".to_string();
    }
    Ok(s)
}

fn join_values(values: &[f64]) -> Result<String, PromptError> {
    let items = values
        .iter()
        .map(|&v| format_value(v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(items.join(", "))
}

fn check_alignment(task: &ForecastTask, cov: &CovariateSeries) -> Result<(), PromptError> {
    let expected = task.history.len() + task.horizon;
    if cov.len() != expected {
        return Err(PromptError::CovariateMisaligned(format!(
            "expected {expected} entries, found {}",
            cov.len()
        )));
    }
    let timestamps = task.all_timestamps();
    if let Some(i) = (0..expected).find(|&i| cov.entries[i].timestamp != timestamps[i]) {
        return Err(PromptError::CovariateMisaligned(format!(
            "entry {i} is at {} but the task expects {}",
            cov.entries[i].timestamp, timestamps[i]
        )));
    }
    if !task.future_covariates.is_empty() {
        let tail = cov.entries[task.history.len()..].iter().map(|e| &e.value);
        if task.future_covariates.len() != task.horizon || !tail.eq(task.future_covariates.iter())
        {
            return Err(PromptError::CovariateMisaligned(
                "future covariates differ from the task's".into(),
            ));
        }
    }
    Ok(())
}

/// Renders `task` (and its covariates) with the template of `spec.format`.
pub fn render_prompt(
    spec: &PromptSpec,
    task: &ForecastTask,
    covariates: Option<&CovariateSeries>,
) -> Result<PromptText, PromptError> {
    spec.validate()?;
    let h = task.horizon;
    let values = task.history.values();
    let data = join_values(&values)?;

    let cov = if spec.covariate.is_some() {
        let cov = covariates.ok_or(PromptError::MissingCovariates(spec.format))?;
        check_alignment(task, cov)?;
        Some(cov)
    } else {
        None
    };
    let split = values.len();
    let cov_text = |range: std::ops::Range<usize>| -> Vec<&str> {
        cov.expect("covariate present")
            .entries[range]
            .iter()
            .map(|e| e.value.as_prompt_text())
            .collect()
    };

    let text = match spec.format {
        PromptFormat::NoCovariate => format!(
            "data: [{data}]. Predict the next {h} values of the time series. \
             Just return the values as a list. No explanation."
        ),
        PromptFormat::Coupled => {
            let keys = cov_text(0..split + h);
            let mut pairs = Vec::with_capacity(keys.len());
            for (i, key) in keys.iter().enumerate() {
                match values.get(i) {
                    Some(&v) => pairs.push(format!("{key}: {}", format_value(v)?)),
                    None => pairs.push(format!("{key}: ")),
                }
            }
            format!(
                "{}\n\nPredict the next {h} values in the time series. \
                 Just return the values as a list. No explanation.",
                pairs.join(", ")
            )
        }
        PromptFormat::Decoupled | PromptFormat::KnowledgeGuided => {
            let body = format!(
                "Data: [{data}]. Covariates: [{}]. Prediction covariates: [{}]. \
                 Predict the next {h} values of the time series. \
                 Just return the prediction values as a list. No explanation.",
                cov_text(0..split).join(", "),
                cov_text(split..split + h).join(", ")
            );
            match (&spec.format, &spec.knowledge_text) {
                (PromptFormat::KnowledgeGuided, Some(k)) => format!("{} {body}", k.trim()),
                _ => body,
            }
        }
        PromptFormat::Contextualized => format!(
            "Data:[{data}]. Covariates:[{}]. Prediction covariates: [{}]. {CONTEXT_PARAGRAPH} \
             Predict the next {h} values based on the observed sequence and the upcoming \
             covariate pattern. Just return the prediction values as a list. No explanation.",
            cov_text(0..split).join(", "),
            cov_text(split..split + h).join(", ")
        ),
        PromptFormat::PromptCast => {
            let (first, last) = match cov {
                Some(_) => {
                    let keys = cov_text(0..split);
                    (keys[0].to_string(), keys[split - 1].to_string())
                }
                None => {
                    let d = |i: usize| task.history.points()[i].timestamp.format("%Y-%m-%d");
                    (d(0).to_string(), d(split - 1).to_string())
                }
            };
            format!(
                "From {first} to {last}, there were [{data}] values recorded. \
                 Predict the next {h} values. \
                 Just return the prediction values as a list of numbers. No explanation."
            )
        }
    };
    Ok(PromptText::new(text))
}
