//! Longest queue first: a child's rank is its queue length.

use crate::sched::RankState;

pub fn on_enqueue(st: &mut RankState) {
    st.rank = st.len as f64;
}

pub fn on_dequeue(st: &mut RankState) {
    st.rank = st.len as f64;
}

/// Longer queues map to lower bucket indices in a queue of `num_buckets`.
/// Lengths past the last bucket share bucket 0.
pub fn key(st: &RankState, num_buckets: usize) -> u64 {
    let cap = num_buckets as u64 - 1;
    cap - (st.len as u64).min(cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_tracks_len() {
        let mut st = RankState {
            len: 3,
            ..Default::default()
        };
        on_enqueue(&mut st);
        assert_eq!(st.rank, 3.0);
        st.len = 2;
        on_dequeue(&mut st);
        assert_eq!(st.rank, 2.0);
        assert!(key(&RankState { len: 5, ..st }, 64) < key(&RankState { len: 3, ..st }, 64));
        assert_eq!(key(&RankState { len: 500, ..st }, 64), 0);
    }
}
