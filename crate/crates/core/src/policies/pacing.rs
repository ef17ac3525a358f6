//! Per-flow maximum rate and pacing rate, turned into shaper timestamps.

use crate::sched::{compute_timestamp, SchedError};

/// Timestamp state for one rate-limited entity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    /// Bytes per second.
    pub rate: f64,
    pub last_ts: u64,
}

impl Gate {
    pub fn new(rate: f64) -> Self {
        Self { rate, last_ts: 0 }
    }

    pub fn next_ts(&mut self, size: u32, now: u64) -> Result<u64, SchedError> {
        compute_timestamp(&mut self.last_ts, size, self.rate, now)
    }

    /// Timestamp the next packet would get, without committing it.
    pub fn peek_ts(&self, size: u32, now: u64) -> Result<u64, SchedError> {
        let mut last = self.last_ts;
        compute_timestamp(&mut last, size, self.rate, now)
    }
}

/// Effective gate rate from a maximum rate and a pacing rate, either of
/// which may be zero for "unset". `None` means the flow is not shaped.
pub fn effective_rate(max_rate: f64, pacing_rate: f64) -> Option<f64> {
    match (max_rate > 0.0, pacing_rate > 0.0) {
        (true, true) => Some(max_rate.min(pacing_rate)),
        (true, false) => Some(max_rate),
        (false, true) => Some(pacing_rate),
        (false, false) => None,
    }
}

/// Release timestamp for a packet of `size` bytes on a flow with the given
/// gate, or `None` for an unshaped flow.
pub fn pacing_rank(
    gate: Option<&mut Gate>,
    size: u32,
    now: u64,
) -> Result<Option<u64>, SchedError> {
    gate.map(|g| g.next_ts(size, now)).transpose()
}
