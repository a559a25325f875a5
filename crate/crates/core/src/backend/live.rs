//! OpenAI-compatible chat-completions client.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::Deserialize;
use serde_json::json;

use super::{
    AttemptError, BackendConfig, BackendError, CompletionBackend, CompletionRequest,
    CompletionResult,
};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "COVACAST_API_KEY";

#[derive(Debug, Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: Option<Message>,
}

#[derive(Debug, Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

pub struct OpenAiBackend {
    config: BackendConfig,
    api_key: String,
    agent: ureq::Agent,
    calls: AtomicU64,
}

impl std::fmt::Debug for OpenAiBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpenAiBackend")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl OpenAiBackend {
    /// Builds a client with the key from `$COVACAST_API_KEY`.
    pub fn from_env(config: BackendConfig) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV).unwrap_or_default();
        Self::with_api_key(config, key)
    }

    pub fn with_api_key(config: BackendConfig, api_key: String) -> Result<Self, BackendError> {
        config.validate()?;
        if api_key.trim().is_empty() {
            return Err(BackendError::AuthMissing);
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Ok(Self {
            config,
            api_key,
            agent,
            calls: AtomicU64::new(0),
        })
    }

    fn url(&self) -> String {
        format!(
            "{}/chat/completions",
            self.config.endpoint_url.trim_end_matches('/')
        )
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<(String, Option<Usage>), AttemptError> {
        let mut response = self
            .agent
            .post(&self.url())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| AttemptError::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        let raw = response
            .body_mut()
            .read_to_string()
            .map_err(|e| AttemptError::Transient(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(AttemptError::Transient(format!("HTTP {status}")));
        }
        if status == 401 || status == 403 {
            return Err(AttemptError::Fatal(BackendError::AuthMissing));
        }
        if !(200..300).contains(&status) {
            return Err(AttemptError::Fatal(BackendError::BackendUnavailable(
                format!("HTTP {status}: {raw}"),
            )));
        }
        let parsed: ChatResponse = serde_json::from_str(&raw)
            .map_err(|e| AttemptError::Fatal(BackendError::MalformedResponse(e.to_string())))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message)
            .and_then(|m| m.content)
            .ok_or_else(|| {
                AttemptError::Fatal(BackendError::MalformedResponse(
                    "reply has no message content".into(),
                ))
            })?;
        Ok((content, parsed.usage))
    }
}

impl CompletionBackend for OpenAiBackend {
    fn id(&self) -> String {
        format!("openai:{}", self.config.model_name)
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        if request.prompt.text.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let started = Instant::now();
        let body = json!({
            "model": self.config.model_name,
            "messages": [{ "role": "user", "content": request.prompt.text }],
            "temperature": request.temperature.unwrap_or(self.config.temperature),
            "max_tokens": self.config.max_output_tokens,
            "seed": request.seed,
        });
        let ((text, usage), attempts) = self
            .config
            .retry_policy()
            .run(request.seed, |_| self.attempt(&body))?;
        let (prompt_tokens, completion_tokens) = match usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (
                request.prompt.token_estimate as u64,
                crate::prompt::token_estimate(&text) as u64,
            ),
        };
        Ok(CompletionResult {
            text,
            latency: started.elapsed(),
            prompt_tokens,
            completion_tokens,
            attempt_count: attempts,
        })
    }

    fn max_concurrency(&self) -> usize {
        self.config.parallelism_limit
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}
