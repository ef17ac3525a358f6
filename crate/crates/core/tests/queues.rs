use std::collections::BTreeMap;

use proptest::prelude::*;

use pktsched::baseline_pq::{BhQueue, HeapQueue, TimingWheel};
use pktsched::bitmap_pq::{find_first_set_word, find_last_set_word, HffsQueue, OccupancyBitmap, QueueConfig};
use pktsched::circular_pq::{CffsQueue, Placement};
use pktsched::{Handle, QueueError};

#[derive(Debug, Clone)]
enum Op {
    Insert(u64),
    Pop,
    Remove(usize),
}

fn ops(span: u64) -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(
        prop_oneof![
            4 => (0..span).prop_map(Op::Insert),
            3 => Just(Op::Pop),
            1 => any::<usize>().prop_map(Op::Remove),
        ],
        0..400,
    )
}

/// Sorted multiset keyed by (rank, arrival) so equal ranks leave in FIFO order.
#[derive(Default)]
struct Model {
    items: BTreeMap<(u64, u64), ()>,
    live: Vec<(Handle, u64, u64)>,
}

impl Model {
    fn insert(&mut self, h: Handle, rank: u64, id: u64) {
        self.items.insert((rank, id), ());
        self.live.push((h, rank, id));
    }

    fn pop(&mut self) -> Option<(u64, u64)> {
        let ((r, id), ()) = self.items.pop_first()?;
        self.live.retain(|e| e.2 != id);
        Some((r, id))
    }

    fn take(&mut self, k: usize) -> Option<(Handle, u64, u64)> {
        if self.live.is_empty() {
            return None;
        }
        let e = self.live.swap_remove(k % self.live.len());
        self.items.remove(&(e.1, e.2));
        Some(e)
    }
}

macro_rules! oracle_case {
    ($name:ident, $make:expr, $span:expr, $check:ident) => {
        proptest! {
            #[test]
            fn $name(script in ops($span)) {
                let mut q = $make;
                let mut m = Model::default();
                for (id, op) in script.into_iter().enumerate() {
                    let id = id as u64;
                    match op {
                        Op::Insert(r) => {
                            let h = q.insert(r, id).unwrap();
                            m.insert(h, r, id);
                        }
                        Op::Pop => prop_assert_eq!(q.pop_min(), m.pop()),
                        Op::Remove(k) => {
                            if let Some((h, r, id)) = m.take(k) {
                                prop_assert_eq!(q.remove(h).unwrap(), (r, id));
                                prop_assert_eq!(q.remove(h), Err(QueueError::InvalidHandle));
                            }
                        }
                    }
                    prop_assert_eq!(q.len(), m.items.len());
                    prop_assert_eq!(q.min_rank(), m.items.keys().next().map(|k| k.0));
                    prop_assert!(q.$check());
                }
                while let Some(want) = m.pop() {
                    prop_assert_eq!(q.pop_min(), Some(want));
                }
                prop_assert!(q.is_empty());
            }
        }
    };
}

oracle_case!(hffs_matches_sorted_multiset, HffsQueue::<u64>::with_buckets(300).unwrap(), 300, is_consistent);
oracle_case!(bh_matches_sorted_multiset, BhQueue::<u64>::new(300).unwrap(), 300, is_consistent);
oracle_case!(
    hffs_narrow_words_match,
    HffsQueue::<u64>::new(QueueConfig::new(200).with_word_width(8)).unwrap(),
    200,
    is_consistent
);

proptest! {
    #[test]
    fn heap_matches_sorted_multiset(ranks in prop::collection::vec(0u64..50, 0..300)) {
        let mut q = HeapQueue::new();
        let mut m: BTreeMap<(u64, u64), ()> = BTreeMap::new();
        for (id, r) in ranks.iter().enumerate() {
            q.insert(*r, id as u64);
            m.insert((*r, id as u64), ());
        }
        while let Some(((r, id), ())) = m.pop_first() {
            prop_assert_eq!(q.pop_min(), Some((r, id)));
        }
        prop_assert!(q.is_empty());
    }

    /// Ranks stay within two windows of the moving base, as the queue expects.
    #[test]
    fn cffs_matches_sorted_multiset(script in ops(1 << 16), q_size in 1usize..200) {
        let mut q = CffsQueue::<u64>::new(q_size).unwrap();
        let mut m = Model::default();
        for (id, op) in script.into_iter().enumerate() {
            let id = id as u64;
            match op {
                Op::Insert(r) => {
                    let rank = q.h_index() + r % (2 * q_size as u64);
                    let h = q.insert(rank, id).unwrap();
                    m.insert(h, rank, id);
                }
                Op::Pop => prop_assert_eq!(q.pop_min(), m.pop()),
                Op::Remove(k) => {
                    if let Some((h, r, id)) = m.take(k) {
                        prop_assert_eq!(q.remove(h).unwrap(), (r, id));
                    }
                }
            }
            prop_assert_eq!(q.len(), m.items.len());
            prop_assert!(q.is_consistent());
        }
        while let Some(want) = m.pop() {
            prop_assert_eq!(q.pop_min(), Some(want));
        }
    }

    /// Arbitrarily far ranks still come out in order once their window
    /// arrives. Rank 0 goes first so the base starts at zero.
    #[test]
    fn cffs_overflow_drains_in_order(mut ranks in prop::collection::vec(0u64..10_000, 1..200)) {
        let mut q = CffsQueue::<u64>::new(16).unwrap();
        ranks.insert(0, 0);
        for (id, r) in ranks.iter().enumerate() {
            q.insert(*r, id as u64).unwrap();
        }
        let mut out = Vec::new();
        while let Some((r, _)) = q.pop_min() {
            out.push(r);
        }
        let mut want = ranks.clone();
        want.sort_unstable();
        prop_assert_eq!(out, want);
    }

    #[test]
    fn bitmap_first_last_match_scan(bits in prop::collection::vec(any::<bool>(), 1..700), w in prop::sample::select(vec![8u32, 16, 32, 64])) {
        let mut bm = OccupancyBitmap::new(bits.len(), w);
        for (i, b) in bits.iter().enumerate() {
            if *b {
                bm.set(i);
            }
        }
        prop_assert!(bm.is_consistent());
        prop_assert_eq!(bm.first(), bits.iter().position(|b| *b));
        prop_assert_eq!(bm.last(), bits.iter().rposition(|b| *b));
        for i in 0..bits.len() {
            bm.clear(i);
        }
        prop_assert!(bm.is_empty() || bm.first().is_none());
        prop_assert!(bm.is_consistent());
    }

    #[test]
    fn word_scans_match_bit_loops(w in any::<u64>()) {
        prop_assert_eq!(find_first_set_word(w), (0..64).find(|i| w >> i & 1 == 1));
        prop_assert_eq!(find_last_set_word(w), (0..64).rev().find(|i| w >> i & 1 == 1));
    }

    #[test]
    fn timing_wheel_releases_each_item_once_after_its_slot(ts in prop::collection::vec(0u64..5_000, 0..200), step in 1u64..700) {
        let mut tw = TimingWheel::new(64, 100).unwrap();
        for (id, t) in ts.iter().enumerate() {
            tw.insert(*t, id).unwrap();
        }
        let mut seen = vec![false; ts.len()];
        let mut now = 0;
        while !tw.is_empty() {
            now += step;
            for (t, id) in tw.advance(now) {
                prop_assert_eq!(t, ts[id]);
                prop_assert!(t / 100 <= now / 100);
                prop_assert!(!seen[id]);
                seen[id] = true;
            }
            prop_assert!(now < 100_000);
        }
        prop_assert!(seen.iter().all(|s| *s));
    }
}

/// Every subset of a 10-bucket queue, popped to empty.
#[test]
fn hffs_exhaustive_small() {
    for mask in 0u32..1 << 10 {
        let mut q = HffsQueue::with_buckets(10).unwrap();
        for r in (0..10).filter(|r| mask >> r & 1 == 1) {
            q.insert(r, r).unwrap();
        }
        let got: Vec<u64> = std::iter::from_fn(|| q.pop_min().map(|p| p.0)).collect();
        let want: Vec<u64> = (0..10).filter(|r| mask >> r & 1 == 1).collect();
        assert_eq!(got, want, "mask {mask:#b}");
    }
}

#[test]
fn out_of_range_ranks_are_rejected() {
    let mut h = HffsQueue::with_buckets(8).unwrap();
    assert!(matches!(h.insert(8, ()), Err(QueueError::RankOutOfRange { rank: 8, .. })));
    let mut b = BhQueue::new(8).unwrap();
    assert!(matches!(b.insert(9, ()), Err(QueueError::RankOutOfRange { .. })));
    assert!(HffsQueue::<()>::with_buckets(0).is_err());
}

#[test]
fn cffs_rejects_ranks_below_base_and_reports_placement() {
    let mut q = CffsQueue::new(10).unwrap();
    assert!(matches!(q.insert_placed(3, ()).unwrap().1, Placement::Primary(3)));
    assert!(matches!(q.insert_placed(14, ()).unwrap().1, Placement::Secondary(4)));
    assert!(matches!(q.insert_placed(95, ()).unwrap().1, Placement::Overflow));
    q.pop_min();
    q.pop_min();
    // Primary drained: the window has rotated past 10.
    assert!(q.h_index() >= 10);
    assert!(matches!(q.insert(2, ()), Err(QueueError::StaleRank { .. })));
    assert_eq!(q.pop_min().map(|p| p.0), Some(95));
}

#[test]
fn granularity_groups_raw_ranks() {
    let cfg = QueueConfig::new(16).with_granularity(10);
    assert_eq!(cfg.bucket_of(0), 0);
    assert_eq!(cfg.bucket_of(19), 1);
    assert_eq!(cfg.bucket_of(155), 15);
}
