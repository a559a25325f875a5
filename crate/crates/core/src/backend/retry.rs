use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BackendError;

/// Outcome of a failed attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum AttemptError {
    /// Worth retrying (HTTP 429/5xx, timeouts, connection resets).
    Transient(String),
    Fatal(BackendError),
}

/// Exponential backoff with multiplicative jitter: the delay before retry
/// `k` (0-based) is `base * 2^k * (1 ± jitter)`, capped at `max_delay`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    /// Fraction in [0, 1).
    pub jitter: f64,
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32, rng: &mut impl Rng) -> Duration {
        let nominal = self.base_delay.as_secs_f64() * 2f64.powi(retry.min(30) as i32);
        let factor = if self.jitter > 0.0 {
            1.0 + rng.random_range(-self.jitter..=self.jitter)
        } else {
            1.0
        };
        Duration::from_secs_f64((nominal * factor).min(self.max_delay.as_secs_f64()))
    }

    /// Runs `op` until it succeeds, fails fatally, or `max_retries + 1`
    /// attempts are spent. `op` receives the 1-based attempt number. Returns
    /// the value and the number of attempts used.
    pub fn run<T>(
        &self,
        seed: u64,
        mut op: impl FnMut(u32) -> Result<T, AttemptError>,
    ) -> Result<(T, u32), BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut last = String::new();
        for attempt in 1..=self.max_retries + 1 {
            match op(attempt) {
                Ok(v) => return Ok((v, attempt)),
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Transient(msg)) => {
                    log::debug!("attempt {attempt} failed: {msg}");
                    last = msg;
                    if attempt <= self.max_retries {
                        std::thread::sleep(self.delay(attempt - 1, &mut rng));
                    }
                }
            }
        }
        Err(BackendError::BackendUnavailable(format!(
            "gave up after {} attempts: {last}",
            self.max_retries + 1
        )))
    }
}
