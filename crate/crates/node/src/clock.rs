//! Unix time in milliseconds that follows tokio's clock, so tests can run
//! the network on paused virtual time.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use tokio::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct Clock {
    origin_unix_ms: u64,
    origin: Instant,
}

impl Clock {
    pub fn system() -> Clock {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .expect("clock after 1970")
            .as_millis() as u64;
        Clock::starting_at(now)
    }

    /// A clock reading `unix_ms` right now and advancing with tokio time.
    pub fn starting_at(unix_ms: u64) -> Clock {
        Clock {
            origin_unix_ms: unix_ms,
            origin: Instant::now(),
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.origin_unix_ms + self.origin.elapsed().as_millis() as u64
    }

    pub fn now_secs(&self) -> u64 {
        self.now_ms() / 1000
    }

    pub fn instant_at(&self, unix_ms: u64) -> Instant {
        self.origin + Duration::from_millis(unix_ms.saturating_sub(self.origin_unix_ms))
    }

    pub async fn sleep_until_ms(&self, unix_ms: u64) {
        tokio::time::sleep_until(self.instant_at(unix_ms)).await;
    }
}
