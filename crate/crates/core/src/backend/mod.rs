//! Completion backends: the prompt-in/text-out contract, an OpenAI-compatible
//! HTTP client, and deterministic offline backends.

mod live;
mod oracle;
mod retry;
mod scripted;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::PromptText;

pub use live::{OpenAiBackend, API_KEY_ENV};
pub use oracle::{oracle_backend_complete, oracle_predictions, NoisyOracleBackend, OracleBackend};
pub use retry::{AttemptError, RetryPolicy};
pub use scripted::ScriptedBackend;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no API key found in ${API_KEY_ENV}")]
    AuthMissing,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("prompt has no recognizable data section: {0}")]
    UnparseablePrompt(String),
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
}

/// One completion call. The seed makes stochastic offline backends
/// reproducible and is forwarded to live endpoints that honor it.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a PromptText,
    pub seed: u64,
    /// Overrides the configured sampling temperature.
    pub temperature: Option<f64>,
}

impl<'a> CompletionRequest<'a> {
    pub fn new(prompt: &'a PromptText, seed: u64) -> Self {
        Self {
            prompt,
            seed,
            temperature: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub latency: Duration,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub attempt_count: u32,
}

/// Anything that turns a prompt into reply text. Implementations must be
/// safe to call from several threads at once.
pub trait CompletionBackend: Send + Sync {
    fn id(&self) -> String;

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError>;

    /// Upper bound on concurrent in-flight calls.
    fn max_concurrency(&self) -> usize {
        usize::MAX
    }

    /// Number of `complete` calls served so far.
    fn call_count(&self) -> u64;
}

fn default_endpoint() -> String {
    "https://api.openai.com/v1".to_string()
}
fn default_model() -> String {
    "gpt-4o-mini".to_string()
}
fn default_max_output_tokens() -> u32 {
    512
}
fn default_timeout() -> f64 {
    60.0
}
fn default_max_retries() -> u32 {
    4
}
fn default_parallelism() -> usize {
    4
}
fn default_base_delay() -> f64 {
    0.5
}

/// Settings for the live chat-completions backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(default = "default_endpoint")]
    pub endpoint_url: String,
    #[serde(default = "default_model")]
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_parallelism")]
    pub parallelism_limit: usize,
    /// First retry delay; later delays double.
    #[serde(default = "default_base_delay")]
    pub retry_base_delay_secs: f64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint_url: default_endpoint(),
            model_name: default_model(),
            temperature: 0.0,
            max_output_tokens: default_max_output_tokens(),
            timeout_secs: default_timeout(),
            max_retries: default_max_retries(),
            parallelism_limit: default_parallelism(),
            retry_base_delay_secs: default_base_delay(),
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::InvalidConfig(m.to_string()));
        if self.parallelism_limit < 1 {
            return bad("parallelism_limit must be at least 1");
        }
        if self.max_retries > 10 {
            return bad("max_retries must be at most 10");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be a finite value >= 0");
        }
        if self.max_output_tokens == 0 {
            return bad("max_output_tokens must be positive");
        }
        if !(self.timeout_secs > 0.0) || !(self.retry_base_delay_secs >= 0.0) {
            return bad("timeouts and delays must be positive");
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_delay: Duration::from_secs_f64(self.retry_base_delay_secs),
            max_delay: Duration::from_secs(30),
            jitter: 0.25,
        }
    }
}
