//! pFabric: serve the flow with the smallest remaining size.
//!
//! Enqueue takes `min(p.rank, f.rank)`; dequeue takes the minimum of the
//! departing packet's rank and the new head's rank, or resets to the empty
//! sentinel when the flow drains.

use crate::sched::RankState;

/// Rank of a flow with nothing queued.
pub const EMPTY_RANK: f64 = f64::INFINITY;

pub fn on_enqueue(st: &mut RankState, p_rank: u64) {
    st.rank = st.rank.min(p_rank as f64);
}

pub fn on_dequeue(st: &mut RankState, popped_rank: u64, new_front: Option<u64>) {
    st.rank = match new_front {
        Some(f) => popped_rank.min(f) as f64,
        None => EMPTY_RANK,
    };
}
