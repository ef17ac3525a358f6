//! Scheduling trees with per-flow ranking, on-dequeue ranking and a single
//! shaper for every rate limit in the tree.

mod config;
mod engine;
mod node_queue;
mod shaper;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::QueueError;

pub use config::{FlowConfig, NodeConfig, PolicyConfig, QueueKind, ShaperConfig};
pub use engine::{Engine, EngineStats, FlowView, ReleaseRecord};
pub use node_queue::NodeQueue;
pub use shaper::{compute_timestamp, NextStage, Shaper, ShaperEntry, StageId};

pub type FlowId = u32;

pub const NS_PER_SEC: f64 = 1e9;

/// A packet as seen by the scheduler. Times are nanoseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub id: u64,
    pub flow: FlowId,
    pub size: u32,
    /// Workload-supplied rank, such as remaining flow size.
    pub rank: u64,
    pub enqueue_ts: u64,
    pub release_ts: u64,
}

impl Packet {
    pub fn new(id: u64, flow: FlowId, size: u32, rank: u64) -> Self {
        Self {
            id,
            flow,
            size,
            rank,
            enqueue_ts: 0,
            release_ts: 0,
        }
    }

    pub fn meta(&self) -> PacketMeta {
        PacketMeta {
            id: self.id,
            flow: self.flow,
            size: self.size,
            rank: self.rank,
        }
    }
}

/// The fields of a packet the shaper and hooks need.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketMeta {
    pub id: u64,
    pub flow: FlowId,
    pub size: u32,
    pub rank: u64,
}

/// Policy ranks of one child (a flow or an inner node) as seen by its parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankState {
    pub rank: f64,
    /// Packets eligible at the parent's queue.
    pub len: u32,
    /// Reservation virtual time, ns.
    pub r_rank: f64,
    /// Limit virtual time, ns.
    pub l_rank: f64,
    /// Share virtual time, bytes per unit share.
    pub s_rank: f64,
}

impl Default for RankState {
    fn default() -> Self {
        Self {
            rank: f64::INFINITY,
            len: 0,
            r_rank: 0.0,
            l_rank: 0.0,
            s_rank: 0.0,
        }
    }
}

/// Per-child policy parameters. Rates are bytes per second; zero means unset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub reservation: f64,
    pub limit: f64,
    pub share: f64,
}

impl Default for RateParams {
    fn default() -> Self {
        Self {
            reservation: 0.0,
            limit: 0.0,
            share: 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SchedError {
    #[error("unknown flow {0}")]
    UnknownFlow(FlowId),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Queue(#[from] QueueError),
}

/// Rank value to bucket index at `granularity` rank units per bucket.
#[inline]
pub fn quantize(rank: f64, granularity: f64) -> u64 {
    if !rank.is_finite() {
        return if rank > 0.0 { u64::MAX } else { 0 };
    }
    let k = (rank / granularity).floor();
    if k <= 0.0 {
        0
    } else if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}
