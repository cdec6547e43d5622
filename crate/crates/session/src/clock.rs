use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

/// Time source, queried per session so simulated sessions can keep
/// independent virtual clocks while running concurrently.
pub trait Clock: Send + Sync {
    fn now_ms(&self, session_id: &str) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self, _session_id: &str) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
    }
}

/// Per-session virtual time starting at `origin_ms`, advanced explicitly.
#[derive(Debug, Default)]
pub struct VirtualClock {
    origin_ms: u64,
    offsets: Mutex<HashMap<String, u64>>,
}

impl VirtualClock {
    pub fn new(origin_ms: u64) -> Self {
        VirtualClock { origin_ms, offsets: Mutex::new(HashMap::new()) }
    }

    pub fn advance(&self, session_id: &str, ms: u64) {
        *self.offsets.lock().unwrap().entry(session_id.to_string()).or_insert(0) += ms;
    }
}

impl Clock for VirtualClock {
    fn now_ms(&self, session_id: &str) -> u64 {
        self.origin_ms + self.offsets.lock().unwrap().get(session_id).copied().unwrap_or(0)
    }
}
