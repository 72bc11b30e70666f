use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use rand::Rng;

/// Token bucket holding at most one token, refilled at `per_second`.
/// Callers block in [`RateLimiter::acquire`] until their slot comes up.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// `None` or a non-positive rate disables limiting.
    pub fn new(per_second: Option<f64>) -> Self {
        let interval = match per_second {
            Some(r) if r > 0.0 && r.is_finite() => Duration::from_secs_f64(1.0 / r),
            _ => Duration::ZERO,
        };
        RateLimiter { interval, next: Mutex::new(None) }
    }

    pub fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

/// Exponential backoff before retry number `attempt` (1-based), with up to
/// 100% random jitter.
pub(crate) fn backoff_delay(base: Duration, attempt: u32) -> Duration {
    if base.is_zero() {
        return Duration::ZERO;
    }
    let exp = base.saturating_mul(1 << attempt.saturating_sub(1).min(10));
    exp.mul_f64(1.0 + rand::thread_rng().gen::<f64>())
}
