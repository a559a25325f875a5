//! Deterministic covariate-aware surrogate backend.
//!
//! The oracle reads the data section back out of a rendered prompt and
//! predicts each future step as the mean of the history values whose
//! covariate equals that step's covariate, falling back to the global
//! history mean. It is an offline test double, not a language model.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use regex::Regex;

use super::{BackendError, CompletionBackend, CompletionRequest, CompletionResult};
use crate::covariates::CENSORED_TOKEN;
use crate::prompt::{format_value, token_estimate, PromptText};

#[derive(Debug, Default, PartialEq)]
struct PromptData {
    values: Vec<f64>,
    /// Covariate keys of the history values and of the horizon steps.
    keys: Option<(Vec<String>, Vec<String>)>,
    horizon: usize,
}

fn horizon_of(text: &str) -> Option<usize> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"Predict the next (\d+) values").expect("valid regex"));
    re.captures_iter(text)
        .last()
        .and_then(|c| c[1].parse().ok())
}

/// Contents of the first `[...]` following the last occurrence of `marker`.
fn bracket_after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    let at = text.rfind(marker)? + marker.len();
    let rest = text[at..].trim_start();
    let rest = rest.strip_prefix('[')?;
    let close = rest.find(']')?;
    Some(&rest[..close])
}

fn split_items(list: &str) -> Vec<String> {
    if list.trim().is_empty() {
        return Vec::new();
    }
    list.split(',').map(|s| s.trim().to_string()).collect()
}

fn parse_numbers(items: &[String]) -> Option<Vec<f64>> {
    items.iter().map(|s| s.parse::<f64>().ok()).collect()
}

fn unparseable(why: &str) -> BackendError {
    BackendError::UnparseablePrompt(why.to_string())
}

fn extract(text: &str) -> Result<PromptData, BackendError> {
    let horizon = horizon_of(text).ok_or_else(|| unparseable("no horizon sentence"))?;

    let (values, keys) = if let Some(end) = text.find("\n\nPredict the next") {
        // coupled: "k1: v1, k2: v2, ..., kT+1: , ..."
        let mut values = Vec::new();
        let mut hist = Vec::new();
        let mut future = Vec::new();
        for piece in text[..end].split(", ") {
            let (key, value) = piece
                .rsplit_once(':')
                .ok_or_else(|| unparseable("coupled entry without ':'"))?;
            let value = value.trim();
            if value.is_empty() {
                future.push(key.trim().to_string());
            } else {
                if !future.is_empty() {
                    return Err(unparseable("observed value after a future covariate"));
                }
                values.push(value.parse().map_err(|_| unparseable("non-numeric value"))?);
                hist.push(key.trim().to_string());
            }
        }
        (values, Some((hist, future)))
    } else if let Some(data) = bracket_after(text, "Data:") {
        let values = parse_numbers(&split_items(data)).ok_or_else(|| unparseable("bad data list"))?;
        let hist = bracket_after(text, "Covariates:").map(split_items);
        let future = bracket_after(text, "Prediction covariates:").map(split_items);
        match (hist, future) {
            (Some(h), Some(f)) => (values, Some((h, f))),
            _ => (values, None),
        }
    } else if let Some(data) = bracket_after(text, "data:").or_else(|| bracket_after(text, "there were")) {
        let values = parse_numbers(&split_items(data)).ok_or_else(|| unparseable("bad data list"))?;
        (values, None)
    } else {
        return Err(unparseable("no data section"));
    };

    if values.is_empty() {
        return Err(unparseable("empty history"));
    }
    if let Some((hist, future)) = &keys {
        if hist.len() != values.len() || future.len() != horizon {
            return Err(unparseable("covariate lists do not line up with the data"));
        }
    }
    Ok(PromptData {
        values,
        keys,
        horizon,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Forecast the oracle would give for `prompt`.
pub fn oracle_predictions(prompt: &str) -> Result<Vec<f64>, BackendError> {
    let data = extract(prompt)?;
    let global = mean(data.values.iter().copied());
    let Some((hist, future)) = data.keys else {
        return Ok(vec![global; data.horizon]);
    };
    Ok(future
        .iter()
        .map(|key| {
            if key == CENSORED_TOKEN {
                return global;
            }
            let matching = hist
                .iter()
                .zip(&data.values)
                .filter(|(k, _)| *k == key)
                .map(|(_, &v)| v);
            let (sum, n) = matching.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if n == 0 {
                global
            } else {
                sum / n as f64
            }
        })
        .collect())
}

fn render_reply(values: &[f64]) -> Result<String, BackendError> {
    let items = values
        .iter()
        .map(|&v| format_value(v).map_err(|e| BackendError::MalformedResponse(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(format!("[{}]", items.join(", ")))
}

fn result(prompt: &PromptText, text: String, started: Instant) -> CompletionResult {
    CompletionResult {
        completion_tokens: token_estimate(&text) as u64,
        prompt_tokens: prompt.token_estimate as u64,
        text,
        latency: started.elapsed(),
        attempt_count: 1,
    }
}

/// Pure covariate-aware oracle completion.
pub fn oracle_backend_complete(prompt: &PromptText) -> Result<CompletionResult, BackendError> {
    let started = Instant::now();
    if prompt.text.is_empty() {
        return Err(BackendError::EmptyPrompt);
    }
    let reply = render_reply(&oracle_predictions(&prompt.text)?)?;
    Ok(result(prompt, reply, started))
}

#[derive(Debug, Default)]
pub struct OracleBackend {
    calls: AtomicU64,
}

impl OracleBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

impl CompletionBackend for OracleBackend {
    fn id(&self) -> String {
        "oracle".to_string()
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        oracle_backend_complete(request.prompt)
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Oracle forecast plus Gaussian noise drawn from the request seed. The
/// noise standard deviation is `noise_std` times the request temperature
/// (1.0 when unset), so temperature 0 reproduces the plain oracle.
#[derive(Debug)]
pub struct NoisyOracleBackend {
    noise_std: f64,
    calls: AtomicU64,
}

impl NoisyOracleBackend {
    pub fn new(noise_std: f64) -> Result<Self, BackendError> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(BackendError::InvalidConfig(format!(
                "noise_std must be finite and >= 0, got {noise_std}"
            )));
        }
        Ok(Self {
            noise_std,
            calls: AtomicU64::new(0),
        })
    }
}

impl CompletionBackend for NoisyOracleBackend {
    fn id(&self) -> String {
        format!("noisy_oracle(std={})", self.noise_std)
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        let started = Instant::now();
        self.calls.fetch_add(1, Ordering::Relaxed);
        if request.prompt.text.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let mut predictions = oracle_predictions(&request.prompt.text)?;
        let std = self.noise_std * request.temperature.unwrap_or(1.0);
        if std > 0.0 {
            let normal = Normal::new(0.0, std).expect("finite std");
            let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
            for p in &mut predictions {
                *p += normal.sample(&mut rng);
            }
        }
        let reply = render_reply(&predictions)?;
        Ok(result(request.prompt, reply, started))
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}
