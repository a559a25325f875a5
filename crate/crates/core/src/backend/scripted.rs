use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use super::{BackendError, CompletionBackend, CompletionRequest, CompletionResult};
use crate::prompt::token_estimate;

/// Replays a fixed queue of replies in call order. Serves one call at a
/// time so replies line up with task order.
#[derive(Debug)]
pub struct ScriptedBackend {
    replies: Mutex<VecDeque<String>>,
    calls: AtomicU64,
}

impl ScriptedBackend {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            calls: AtomicU64::new(0),
        }
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("poisoned").len()
    }
}

impl CompletionBackend for ScriptedBackend {
    fn id(&self) -> String {
        "scripted".to_string()
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<CompletionResult, BackendError> {
        if request.prompt.text.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let text = self
            .replies
            .lock()
            .expect("poisoned")
            .pop_front()
            .ok_or_else(|| BackendError::BackendUnavailable("script exhausted".into()))?;
        Ok(CompletionResult {
            completion_tokens: token_estimate(&text) as u64,
            prompt_tokens: request.prompt.token_estimate as u64,
            text,
            latency: Duration::ZERO,
            attempt_count: 1,
        })
    }

    fn max_concurrency(&self) -> usize {
        1
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}
