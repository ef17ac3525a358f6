//! Reference policies as enqueue/dequeue hooks over [`RankState`](crate::sched::RankState).

pub mod hclock;
pub mod lqf;
pub mod pacing;
pub mod pfabric;
pub mod share;

use serde::{Deserialize, Serialize};

use crate::sched::QueueKind;

/// Ranking policy of a tree node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Start-time fair queueing over child shares.
    #[default]
    Share,
    /// Longest queue first.
    Lqf,
    /// Smallest remaining size first.
    Pfabric,
    /// Reservation, limit and share per child.
    Hclock,
}

impl PolicyKind {
    pub fn default_queue(self) -> QueueKind {
        match self {
            Self::Share | Self::Hclock => QueueKind::Cffs,
            Self::Lqf | Self::Pfabric => QueueKind::Hffs,
        }
    }

    /// Buckets per queue, or per window for the circular kinds.
    pub fn default_buckets(self) -> usize {
        match self {
            Self::Share => 4096,
            Self::Lqf => 1024,
            Self::Pfabric => 65_536,
            Self::Hclock => 16_384,
        }
    }

    /// Rank units per bucket: bytes for share ranks, nanoseconds for hClock
    /// time ranks, raw units otherwise.
    pub fn default_granularity(self) -> f64 {
        match self {
            Self::Share => 64.0,
            Self::Lqf | Self::Pfabric => 1.0,
            Self::Hclock => 1000.0,
        }
    }
}
