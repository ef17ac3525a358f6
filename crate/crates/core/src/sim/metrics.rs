use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::sched::{FlowId, ReleaseRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceEvent {
    Enqueue,
    Dequeue,
    Release,
}

/// One line of the trace dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: u64,
    pub event: TraceEvent,
    pub flow: FlowId,
    pub packet: u64,
    pub rank: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowMetrics {
    pub packets_out: u64,
    pub bytes_out: u64,
    /// Transmission start time and size of every packet sent.
    pub departures: Vec<(u64, u32)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimMetrics {
    pub duration_ns: u64,
    pub window_ns: u64,
    pub packets_in: u64,
    pub packets_out: u64,
    /// Packets still inside the scheduler when the run ended.
    pub queued_end: u64,
    /// Arrivals held back by the per-flow cap or the shaper horizon.
    pub deferred: u64,
    pub flows: BTreeMap<FlowId, FlowMetrics>,
    pub trace: Vec<TraceRecord>,
    pub releases: Vec<ReleaseRecord>,
    /// Served rank minus smallest head rank, when tracked.
    pub rank_error: BTreeMap<u64, u64>,
}

impl SimMetrics {
    pub fn is_conserved(&self) -> bool {
        self.packets_in == self.packets_out + self.queued_end
    }

    pub fn bytes_out(&self, flow: FlowId) -> u64 {
        self.flows.get(&flow).map_or(0, |f| f.bytes_out)
    }

    /// Mean rate over the run in bits per second.
    pub fn throughput_bps(&self, flow: FlowId) -> f64 {
        self.rate(self.bytes_out(flow))
    }

    pub fn aggregate_bps(&self) -> f64 {
        self.rate(self.flows.values().map(|f| f.bytes_out).sum())
    }

    fn rate(&self, bytes: u64) -> f64 {
        if self.duration_ns == 0 {
            0.0
        } else {
            bytes as f64 * 8.0 * 1e9 / self.duration_ns as f64
        }
    }

    /// Bits per second in consecutive aligned windows.
    pub fn rate_series(&self, flows: &[FlowId]) -> Vec<f64> {
        if self.window_ns == 0 {
            return Vec::new();
        }
        let n = self.duration_ns.div_ceil(self.window_ns) as usize;
        if n == 0 {
            return Vec::new();
        }
        let mut bytes = vec![0u64; n];
        for f in flows {
            for &(t, s) in self.flows.get(f).map_or(&[][..], |m| &m.departures) {
                bytes[((t / self.window_ns) as usize).min(n - 1)] += s as u64;
            }
        }
        let scale = 8.0 * 1e9 / self.window_ns as f64;
        bytes.into_iter().map(|b| b as f64 * scale).collect()
    }

    /// Largest byte count sent by `flows` in any window of `window_ns`,
    /// sliding over every departure.
    pub fn max_window_bytes(&self, flows: &[FlowId], window_ns: u64) -> u64 {
        let mut deps: Vec<(u64, u32)> = flows
            .iter()
            .filter_map(|f| self.flows.get(f))
            .flat_map(|m| m.departures.iter().copied())
            .collect();
        deps.sort_unstable();
        let (mut lo, mut sum, mut best) = (0, 0u64, 0u64);
        for hi in 0..deps.len() {
            sum += deps[hi].1 as u64;
            while deps[hi].0 - deps[lo].0 >= window_ns {
                sum -= deps[lo].1 as u64;
                lo += 1;
            }
            best = best.max(sum);
        }
        best
    }

    /// Packet ids in service order, from the trace.
    pub fn order(&self) -> Vec<u64> {
        self.trace
            .iter()
            .filter(|r| r.event == TraceEvent::Dequeue)
            .map(|r| r.packet)
            .collect()
    }

    /// Writes the trace as one JSON object per line.
    pub fn write_trace<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.trace {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
