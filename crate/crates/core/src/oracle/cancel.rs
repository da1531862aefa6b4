use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

/// Cooperative cancellation signal shared between a batch and its probes.
#[derive(Debug, Clone, Default)]
pub struct CancelToken {
    inner: Arc<(Mutex<bool>, Condvar)>,
}

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        let (flag, cv) = &*self.inner;
        *flag.lock().expect("cancel flag poisoned") = true;
        cv.notify_all();
    }

    pub fn is_cancelled(&self) -> bool {
        *self.inner.0.lock().expect("cancel flag poisoned")
    }

    /// Sleeps for `duration` or until cancelled. Returns `false` if the
    /// sleep was cut short by cancellation.
    pub fn sleep(&self, duration: Duration) -> bool {
        let deadline = Instant::now() + duration;
        let (flag, cv) = &*self.inner;
        let mut cancelled = flag.lock().expect("cancel flag poisoned");
        loop {
            if *cancelled {
                return false;
            }
            let now = Instant::now();
            if now >= deadline {
                return true;
            }
            cancelled = cv.wait_timeout(cancelled, deadline - now).expect("cancel flag poisoned").0;
        }
    }
}
