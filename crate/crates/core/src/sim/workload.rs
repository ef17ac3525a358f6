use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sched::{FlowId, SchedError};

pub const MTU: u32 = 1500;

/// Packet sizes drawn by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SizeDist {
    Fixed {
        bytes: u32,
    },
    #[default]
    Mtu,
    /// 64, 576 or 1500 bytes with probabilities 0.5, 0.1 and 0.4.
    Mixed,
}

impl SizeDist {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        match *self {
            SizeDist::Fixed { bytes } => bytes,
            SizeDist::Mtu => MTU,
            SizeDist::Mixed => match rng.gen_range(0..10) {
                0..=4 => 64,
                5 => 576,
                _ => MTU,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Arrival {
    /// Every flow is refilled up to the per-flow cap as soon as it drains.
    #[default]
    Backlogged,
    /// Poisson arrivals at each flow's `rate_bps`.
    Rate,
}

/// Per-flow traffic parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowLoad {
    pub id: FlowId,
    /// Offered load in bits per second, for rate-driven arrivals.
    #[serde(default)]
    pub rate_bps: f64,
    /// Flow length in bytes. Packets carry the remaining length in KiB as
    /// their rank, and the flow stops once it is exhausted.
    #[serde(default)]
    pub remaining_bytes: Option<u64>,
    #[serde(default)]
    pub start_ns: u64,
}

impl FlowLoad {
    pub fn new(id: FlowId) -> Self {
        Self {
            id,
            rate_bps: 0.0,
            remaining_bytes: None,
            start_ns: 0,
        }
    }

    pub fn rate(mut self, bps: f64) -> Self {
        self.rate_bps = bps;
        self
    }

    pub fn remaining(mut self, bytes: u64) -> Self {
        self.remaining_bytes = Some(bytes);
        self
    }
}

fn d_seed() -> u64 {
    1
}
fn d_line() -> f64 {
    1e9
}
fn d_cap() -> usize {
    32
}
fn d_batch() -> u64 {
    10 * 1024
}
fn d_window() -> u64 {
    100_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    #[serde(default = "d_seed")]
    pub seed: u64,
    pub duration_ns: u64,
    #[serde(default)]
    pub size: SizeDist,
    #[serde(default)]
    pub arrival: Arrival,
    /// Empty means every configured flow, with default parameters.
    #[serde(default, rename = "flow")]
    pub flows: Vec<FlowLoad>,
    #[serde(default = "d_line")]
    pub line_rate_bps: f64,
    /// Packets a flow may hold inside the scheduler before the generator
    /// is pushed back.
    #[serde(default = "d_cap")]
    pub flow_cap: usize,
    /// Bytes served per flow turn; 0 serves one packet per turn.
    #[serde(default = "d_batch")]
    pub batch_bytes: u64,
    #[serde(default = "d_window")]
    pub rate_window_ns: u64,
    /// Keep an event trace.
    #[serde(default)]
    pub trace: bool,
    /// Histogram the gap between each served rank and the smallest head rank.
    #[serde(default)]
    pub track_rank_error: bool,
}

impl Workload {
    pub fn backlogged(duration_ns: u64) -> Self {
        Self {
            seed: d_seed(),
            duration_ns,
            size: SizeDist::Mtu,
            arrival: Arrival::Backlogged,
            flows: Vec::new(),
            line_rate_bps: d_line(),
            flow_cap: d_cap(),
            batch_bytes: d_batch(),
            rate_window_ns: d_window(),
            trace: false,
            track_rank_error: false,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SchedError> {
        let w: Self = toml::from_str(s).map_err(|e| SchedError::Config(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SchedError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SchedError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), SchedError> {
        let err = |m: String| Err(SchedError::Config(m));
        if !(self.line_rate_bps > 0.0 && self.line_rate_bps.is_finite()) {
            return err(format!("line rate {} must be positive", self.line_rate_bps));
        }
        if self.flow_cap == 0 {
            return err("flow cap must be at least 1".into());
        }
        if self.rate_window_ns == 0 {
            return err("rate window must be positive".into());
        }
        if let SizeDist::Fixed { bytes: 0 } = self.size {
            return err("fixed packet size must be positive".into());
        }
        for f in &self.flows {
            if !(f.rate_bps >= 0.0 && f.rate_bps.is_finite()) {
                return err(format!("flow {} rate {} is invalid", f.id, f.rate_bps));
            }
            if self.arrival == Arrival::Rate && f.rate_bps == 0.0 {
                return err(format!(
                    "flow {} needs a rate for rate-driven arrivals",
                    f.id
                ));
            }
        }
        Ok(())
    }
}
