use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Counting semaphore bounding in-flight gateway requests.
#[derive(Debug)]
pub struct Limiter {
    capacity: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

/// Releases its slot on drop.
pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Limiter {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn in_flight(&self) -> usize {
        *self.in_flight.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Waits at most `timeout` for a free slot.
    pub fn acquire(&self, timeout: Duration) -> Result<Permit<'_>> {
        let deadline = Instant::now() + timeout;
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.capacity {
            let now = Instant::now();
            if now >= deadline {
                return Err(Error::Transport(format!(
                    "no request slot free within {timeout:?}"
                )));
            }
            let (guard, _) = self
                .freed
                .wait_timeout(n, deadline - now)
                .unwrap_or_else(|e| e.into_inner());
            n = guard;
        }
        *n += 1;
        Ok(Permit { limiter: self })
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.limiter.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.limiter.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn bounds_concurrency() {
        let limiter = Arc::new(Limiter::new(2));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let l = Arc::clone(&limiter);
                let p = Arc::clone(&peak);
                std::thread::spawn(move || {
                    let _permit = l.acquire(Duration::from_secs(5)).unwrap();
                    p.fetch_max(l.in_flight(), Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(10));
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
        assert_eq!(limiter.in_flight(), 0);
    }

    #[test]
    fn times_out_when_full() {
        let l = Limiter::new(1);
        let _held = l.acquire(Duration::from_millis(10)).unwrap();
        assert!(l.acquire(Duration::from_millis(20)).is_err());
    }
}
