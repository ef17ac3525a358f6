//! Bucketed integer priority queues and a programmable packet scheduler.
//!
//! - [`bitmap_pq`]: find-first-set queues over a fixed rank range.
//! - [`circular_pq`]: two-window queues over a moving rank range.
//! - [`gradient_pq`]: exact and approximate gradient queues.
//! - [`baseline_pq`]: reference queues used by the benchmarks.
//! - [`sched`]: scheduling trees with a single shaper.
//! - [`policies`]: LQF, hClock, pFabric and pacing.
//! - [`sim`]: discrete-event simulator and ordering oracles.
//! - [`bench`]: microbenchmarks, error sweeps, plots and the queue guide.

mod arena;
pub mod error;

pub mod baseline_pq;
pub mod bitmap_pq;
pub mod circular_pq;
pub mod gradient_pq;

pub use arena::Handle;
pub use error::QueueError;

pub mod policies;
pub mod sched;
pub mod sim;
pub mod bench;
