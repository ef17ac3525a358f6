//! hClock: each child carries a reservation rank, a limit rank and a share
//! rank, and sits in up to three queues at once.
//!
//! Ranks move on enqueue. Reservation and share ranks catch up to the
//! present only when a child becomes active; the limit rank catches up on
//! every enqueue so that a limit never banks credit.

use crate::arena::Handle;
use crate::circular_pq::CffsQueue;
use crate::error::QueueError;
use crate::sched::{quantize, RankState, RateParams, NS_PER_SEC};

pub fn on_enqueue(
    st: &mut RankState,
    p: &RateParams,
    size: u32,
    now: u64,
    activated: bool,
    vmin: f64,
) {
    let now = now as f64;
    if activated {
        st.r_rank = st.r_rank.max(now);
        st.s_rank = st.s_rank.max(vmin);
    }
    if p.reservation > 0.0 {
        st.r_rank += size as f64 * NS_PER_SEC / p.reservation;
    }
    if p.limit > 0.0 {
        st.l_rank = st.l_rank.max(now) + size as f64 * NS_PER_SEC / p.limit;
    }
    st.s_rank += size as f64 / p.share;
}

/// Which rule picked a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Reservation,
    Share,
}

#[derive(Debug, Clone, Copy, Default)]
struct Slot {
    r: Option<Handle>,
    s: Option<Handle>,
    l: Option<Handle>,
    r_key: u64,
    s_key: u64,
    has_reservation: bool,
}

/// Reservation, share and limit queues over a node's children.
#[derive(Debug)]
pub struct HclockSelector {
    r: CffsQueue<u32>,
    s: CffsQueue<u32>,
    l: CffsQueue<u32>,
    slots: Vec<Slot>,
    time_granularity: f64,
    share_granularity: f64,
}

impl HclockSelector {
    /// `q_size` buckets per window; time ranks use `time_granularity` ns per
    /// bucket and share ranks `share_granularity` bytes per bucket.
    pub fn new(
        children: usize,
        q_size: usize,
        time_granularity: f64,
        share_granularity: f64,
    ) -> Result<Self, QueueError> {
        Ok(Self {
            r: CffsQueue::new(q_size)?,
            s: CffsQueue::new(q_size)?,
            l: CffsQueue::new(q_size)?,
            slots: vec![Slot::default(); children],
            time_granularity,
            share_granularity,
        })
    }

    /// Empty queues are anchored at `floor_key` so that later, smaller
    /// ranks do not land below the window. Ranks still below it are filed
    /// at the window base.
    fn push(q: &mut CffsQueue<u32>, key: u64, floor_key: u64, c: u32) -> Handle {
        if q.is_empty() {
            q.rebase(key.min(floor_key)).expect("empty queue");
        }
        q.insert(key.max(q.h_index()), c).expect("clamped key")
    }

    pub fn remove(&mut self, c: u32) {
        let slot = &mut self.slots[c as usize];
        if let Some(h) = slot.r.take() {
            self.r.remove(h).expect("tracked handle");
        }
        if let Some(h) = slot.s.take() {
            self.s.remove(h).expect("tracked handle");
        }
        if let Some(h) = slot.l.take() {
            self.l.remove(h).expect("tracked handle");
        }
    }

    /// (Re)files child `c` from its current ranks: into the limit queue if
    /// its limit rank is in the future, otherwise into the reservation and
    /// share queues.
    pub fn place(&mut self, c: u32, st: &RankState, p: &RateParams, now: u64) {
        self.remove(c);
        let tg = self.time_granularity;
        let slot = &mut self.slots[c as usize];
        slot.r_key = quantize(st.r_rank, tg);
        slot.s_key = quantize(st.s_rank, self.share_granularity);
        slot.has_reservation = p.reservation > 0.0;
        if p.limit > 0.0 && st.l_rank > now as f64 {
            let now_key = quantize(now as f64, tg);
            slot.l = Some(Self::push(&mut self.l, quantize(st.l_rank, tg), now_key, c));
        } else {
            self.file_eligible(c, now);
        }
    }

    fn file_eligible(&mut self, c: u32, now: u64) {
        let slot = self.slots[c as usize];
        let now_key = quantize(now as f64, self.time_granularity);
        let r = slot
            .has_reservation
            .then(|| Self::push(&mut self.r, slot.r_key, now_key, c));
        let s = Self::push(&mut self.s, slot.s_key, slot.s_key, c);
        let slot = &mut self.slots[c as usize];
        slot.r = r;
        slot.s = Some(s);
    }

    fn promote(&mut self, now: u64) {
        let now_key = quantize(now as f64, self.time_granularity);
        while self.l.min_rank().is_some_and(|k| k <= now_key) {
            let (_, c) = self.l.pop_min().expect("nonempty");
            self.slots[c as usize].l = None;
            self.file_eligible(c, now);
        }
    }

    /// Phase one: smallest reservation rank at or before `now` among
    /// children under their limit. Phase two: smallest share rank among
    /// children under their limit.
    pub fn pick(&mut self, now: u64) -> Option<(u32, Phase)> {
        self.promote(now);
        let now_key = quantize(now as f64, self.time_granularity);
        if self.r.min_rank().is_some_and(|k| k <= now_key) {
            let (_, _, c) = self.r.front().expect("nonempty");
            return Some((*c, Phase::Reservation));
        }
        self.s.front().map(|(_, _, c)| (*c, Phase::Share))
    }

    /// Earliest time a throttled child becomes eligible.
    pub fn next_wakeup(&self) -> Option<u64> {
        self.l
            .min_rank()
            .map(|k| (k as f64 * self.time_granularity).ceil() as u64)
    }

    /// Smallest share rank among eligible children.
    pub fn min_active_s(&self) -> Option<f64> {
        self.s.min_rank().map(|k| k as f64 * self.share_granularity)
    }

    pub fn is_throttled(&self, c: u32) -> bool {
        self.slots[c as usize].l.is_some()
    }

    pub fn is_queued(&self, c: u32) -> bool {
        let s = &self.slots[c as usize];
        s.s.is_some() || s.l.is_some()
    }
}
