use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Gateway-wide concurrency cap plus an optional minimum spacing between
/// request starts derived from a requests-per-minute budget.
pub struct RateLimiter {
    max_concurrency: usize,
    active: Mutex<usize>,
    freed: Condvar,
    min_interval: Option<Duration>,
    next_start: Mutex<Option<Instant>>,
}

pub struct Permit<'a> {
    limiter: &'a RateLimiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut active = self.limiter.active.lock().unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.limiter.freed.notify_one();
    }
}

impl RateLimiter {
    pub fn new(max_concurrency: usize, requests_per_minute: Option<u32>) -> Self {
        RateLimiter {
            max_concurrency: max_concurrency.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
            min_interval: requests_per_minute
                .filter(|&r| r > 0)
                .map(|r| Duration::from_secs_f64(60.0 / r as f64)),
            next_start: Mutex::new(None),
        }
    }

    pub fn max_concurrency(&self) -> usize {
        self.max_concurrency
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.max_concurrency {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        drop(active);
        if let Some(interval) = self.min_interval {
            let wait = {
                let mut next = self.next_start.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                let start = next.map_or(now, |n| n.max(now));
                *next = Some(start + interval);
                start - now
            };
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        Permit { limiter: self }
    }
}
