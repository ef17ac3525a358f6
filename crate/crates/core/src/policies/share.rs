//! Proportional share with start-time virtual tags.

use crate::sched::RankState;

/// A child becoming active again starts no earlier than the node's virtual time.
pub fn on_activate(st: &mut RankState, vtime: f64) {
    st.s_rank = st.s_rank.max(vtime);
}

pub fn on_dequeue(st: &mut RankState, size: u32, share: f64) {
    st.s_rank += size as f64 / share;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_advance_by_size_over_share() {
        let mut st = RankState::default();
        on_activate(&mut st, 100.0);
        assert_eq!(st.s_rank, 100.0);
        on_dequeue(&mut st, 1500, 3.0);
        assert_eq!(st.s_rank, 600.0);
        on_activate(&mut st, 10.0);
        assert_eq!(st.s_rank, 600.0);
    }
}
