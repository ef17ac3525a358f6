use thiserror::Error;

/// Errors raised by the queue structures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueueError {
    #[error("rank {rank} outside [{lo}, {hi})")]
    RankOutOfRange { rank: u64, lo: u64, hi: u64 },
    #[error("rank {rank} is below the current window base {base}")]
    StaleRank { rank: u64, base: u64 },
    #[error("handle does not refer to a live item")]
    InvalidHandle,
    #[error("rotation requested while the primary window is not empty")]
    PrimaryNotEmpty,
    #[error("timestamp {ts} beyond horizon ending at {horizon_end}")]
    BeyondHorizon { ts: u64, horizon_end: u64 },
    #[error("bucket {index} is already marked {}", if *.nonempty { "nonempty" } else { "empty" })]
    StateConflict { index: usize, nonempty: bool },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
