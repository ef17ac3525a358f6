//! Two-window circular queues over a moving rank range.
//!
//! The primary window covers `[h, h + q)` and the secondary
//! `[h + q, h + 2q)`. When the primary drains, the two swap roles and `h`
//! moves up by `q`. Ranks past both windows are parked in the last secondary
//! bucket and re-filed when that bucket reaches the front.

use crate::arena::{Arena, FifoList, Handle, NIL};
use crate::bitmap_pq::OccupancyBitmap;
use crate::error::QueueError;
use crate::gradient_pq::{ApproxRange, ApproxStats, GradientIndex, Rounding};

/// Occupancy index for one window of `q` buckets, offsets `0..q`.
pub trait WindowIndex {
    fn set(&mut self, off: usize);
    fn clear(&mut self, off: usize);
    /// Offset to serve next. Approximate indexes may return a bucket other
    /// than the lowest nonempty one.
    fn first(&mut self) -> Option<usize>;
    /// Lowest nonempty offset.
    fn first_exact(&self) -> Option<usize>;
    fn clear_all(&mut self);
}

/// Exact window index backed by a hierarchical FFS bitmap.
#[derive(Debug, Clone)]
pub struct BitmapWindow(OccupancyBitmap);

impl BitmapWindow {
    pub fn new(q: usize) -> Self {
        Self(OccupancyBitmap::new(q, 64))
    }

    pub fn bitmap(&self) -> &OccupancyBitmap {
        &self.0
    }
}

impl WindowIndex for BitmapWindow {
    #[inline]
    fn set(&mut self, off: usize) {
        self.0.set(off)
    }
    #[inline]
    fn clear(&mut self, off: usize) {
        self.0.clear(off)
    }
    #[inline]
    fn first(&mut self) -> Option<usize> {
        self.0.first()
    }
    fn first_exact(&self) -> Option<usize> {
        self.0.first()
    }
    fn clear_all(&mut self) {
        self.0.clear_all()
    }
}

/// Approximate window index: offset `k` maps to gradient index `imax − k`,
/// so the lowest offset is the highest index.
#[derive(Debug, Clone)]
pub struct GradientWindow {
    index: GradientIndex,
}

impl GradientWindow {
    pub fn new(q: usize) -> Result<Self, QueueError> {
        Ok(Self {
            index: GradientIndex::approximate(ApproxRange::for_buckets(q)?),
        })
    }

    pub fn index(&self) -> &GradientIndex {
        &self.index
    }

    pub fn index_mut(&mut self) -> &mut GradientIndex {
        &mut self.index
    }

    #[inline]
    fn to_index(&self, off: usize) -> usize {
        self.index.range().imax - off
    }
}

impl WindowIndex for GradientWindow {
    fn set(&mut self, off: usize) {
        let i = self.to_index(off);
        self.index
            .mark(i, true)
            .expect("offset state tracked by caller");
    }
    fn clear(&mut self, off: usize) {
        let i = self.to_index(off);
        self.index
            .mark(i, false)
            .expect("offset state tracked by caller");
    }
    fn first(&mut self) -> Option<usize> {
        let loc = self.index.locate_max()?;
        Some(self.index.range().imax - loc.found)
    }
    fn first_exact(&self) -> Option<usize> {
        self.index.true_max().map(|i| self.index.range().imax - i)
    }
    fn clear_all(&mut self) {
        self.index.clear()
    }
}

/// Where an insert landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Primary(usize),
    Secondary(usize),
    /// Past both windows; parked in the last secondary bucket.
    Overflow,
}

/// Two-window circular bucketed min-queue.
#[derive(Debug)]
pub struct Circular<T, W> {
    arena: Arena<T>,
    lists: [Vec<FifoList>; 2],
    index: [W; 2],
    counts: [usize; 2],
    primary: usize,
    h: u64,
    q: u64,
    len: usize,
    rotations: u64,
    /// Set by `rebase`; stops the next insert from moving the base.
    pinned: bool,
}

/// Circular queue with exact bitmap windows.
pub type CffsQueue<T> = Circular<T, BitmapWindow>;
/// Circular queue with approximate gradient windows.
pub type CircularApproxQueue<T> = Circular<T, GradientWindow>;

impl<T> CffsQueue<T> {
    /// Queue with `q_size` buckets per window, starting at rank 0.
    pub fn new(q_size: usize) -> Result<Self, QueueError> {
        check_q(q_size)?;
        Ok(Self::with_windows(
            q_size,
            [BitmapWindow::new(q_size), BitmapWindow::new(q_size)],
        ))
    }

    pub fn bitmaps(&self) -> (&OccupancyBitmap, &OccupancyBitmap) {
        (
            self.index[self.primary].bitmap(),
            self.index[1 - self.primary].bitmap(),
        )
    }
}

impl<T> CircularApproxQueue<T> {
    pub fn new(q_size: usize) -> Result<Self, QueueError> {
        check_q(q_size)?;
        Ok(Self::with_windows(
            q_size,
            [GradientWindow::new(q_size)?, GradientWindow::new(q_size)?],
        ))
    }

    pub fn set_rounding(&mut self, r: Rounding) {
        self.index
            .iter_mut()
            .for_each(|w| w.index_mut().set_rounding(r));
    }

    pub fn set_tracking(&mut self, on: bool) {
        self.index
            .iter_mut()
            .for_each(|w| w.index_mut().set_tracking(on));
    }

    /// Lookup counters merged over both windows.
    pub fn stats(&self) -> ApproxStats {
        let mut s = self.index[0].index().stats().clone();
        let o = self.index[1].index().stats();
        s.lookups += o.lookups;
        s.hits += o.hits;
        s.search_len_total += o.search_len_total;
        s.abs_errors.extend_from_slice(&o.abs_errors);
        s.signed_estimate_error_total += o.signed_estimate_error_total;
        s
    }

    pub fn window_range(&self) -> ApproxRange {
        *self.index[0].index().range()
    }
}

fn check_q(q: usize) -> Result<(), QueueError> {
    if q == 0 || q >= NIL as usize {
        return Err(QueueError::InvalidConfig(format!(
            "q_size {q} out of range"
        )));
    }
    Ok(())
}

impl<T, W: WindowIndex> Circular<T, W> {
    pub fn with_windows(q_size: usize, windows: [W; 2]) -> Self {
        Self {
            arena: Arena::default(),
            lists: [
                vec![FifoList::default(); q_size],
                vec![FifoList::default(); q_size],
            ],
            index: windows,
            counts: [0, 0],
            primary: 0,
            h: 0,
            q: q_size as u64,
            len: 0,
            rotations: 0,
            pinned: false,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Lowest rank covered by the primary window.
    pub fn h_index(&self) -> u64 {
        self.h
    }

    pub fn q_size(&self) -> usize {
        self.q as usize
    }

    pub fn rotations(&self) -> u64 {
        self.rotations
    }

    /// Items held by the primary and secondary windows.
    pub fn window_counts(&self) -> (usize, usize) {
        (self.counts[self.primary], self.counts[1 - self.primary])
    }

    fn place(&self, rank: u64) -> (usize, usize, Placement) {
        let sec = 1 - self.primary;
        if rank < self.h + self.q {
            let off = (rank - self.h) as usize;
            (self.primary, off, Placement::Primary(off))
        } else if rank < self.h + 2 * self.q {
            let off = (rank - self.h - self.q) as usize;
            (sec, off, Placement::Secondary(off))
        } else {
            (sec, self.q as usize - 1, Placement::Overflow)
        }
    }

    fn link(&mut self, w: usize, off: usize, slot: u32) {
        if self.lists[w][off].is_empty() {
            self.index[w].set(off);
        }
        {
            let n = self.arena.node_mut(slot);
            n.window = w as u8;
            n.bucket = off as u32;
        }
        self.lists[w][off].push_back(&mut self.arena, slot);
        self.counts[w] += 1;
    }

    fn unlink(&mut self, slot: u32) {
        let (w, off) = {
            let n = self.arena.node(slot);
            (n.window as usize, n.bucket as usize)
        };
        self.lists[w][off].unlink(&mut self.arena, slot);
        if self.lists[w][off].is_empty() {
            self.index[w].clear(off);
        }
        self.counts[w] -= 1;
    }

    pub fn insert(&mut self, rank: u64, item: T) -> Result<Handle, QueueError> {
        self.insert_placed(rank, item).map(|(h, _)| h)
    }

    /// Inserts and reports which window and bucket received the item.
    pub fn insert_placed(&mut self, rank: u64, item: T) -> Result<(Handle, Placement), QueueError> {
        if self.len == 0 && !self.pinned && rank >= self.h + 2 * self.q {
            self.h = rank / self.q * self.q;
        }
        self.pinned = false;
        if rank < self.h {
            return Err(QueueError::StaleRank { rank, base: self.h });
        }
        let (w, off, placement) = self.place(rank);
        let h = self.arena.alloc(rank, item, off as u32, w as u8);
        let slot = self.arena.resolve(h).expect("fresh handle");
        self.link(w, off, slot);
        self.len += 1;
        Ok((h, placement))
    }

    /// Moves the window base of an empty queue to the window holding `rank`.
    pub fn rebase(&mut self, rank: u64) -> Result<(), QueueError> {
        if self.len != 0 {
            return Err(QueueError::PrimaryNotEmpty);
        }
        self.h = rank / self.q * self.q;
        self.pinned = true;
        Ok(())
    }

    /// Swaps the windows and advances `h` by one window.
    pub fn rotate(&mut self) -> Result<(), QueueError> {
        if self.counts[self.primary] != 0 {
            return Err(QueueError::PrimaryNotEmpty);
        }
        self.primary = 1 - self.primary;
        self.h += self.q;
        self.rotations += 1;
        Ok(())
    }

    /// Called with an empty primary and a nonempty secondary. Rotates, or
    /// jumps straight to the lowest parked rank when nothing else is left.
    fn advance(&mut self) {
        let sec = 1 - self.primary;
        let last = self.q as usize - 1;
        if self.index[sec].first_exact() == Some(last) {
            let mut min = u64::MAX;
            let mut s = self.lists[sec][last].head;
            while s != NIL {
                let n = self.arena.node(s);
                min = min.min(n.rank);
                s = n.next;
            }
            let target = min / self.q * self.q;
            if target >= self.h + 2 * self.q {
                let mut parked = Vec::with_capacity(self.lists[sec][last].len as usize);
                while let Some(s) = self.lists[sec][last].pop_front(&mut self.arena) {
                    parked.push(s);
                }
                self.index[sec].clear(last);
                self.counts[sec] = 0;
                self.h = target;
                self.rotations += 1;
                for s in parked {
                    let rank = self.arena.node(s).rank;
                    let (w, off, _) = self.place(rank);
                    self.link(w, off, s);
                }
                return;
            }
        }
        self.rotate().expect("primary is empty");
    }

    /// Brings the next item to serve to the front and returns its slot.
    fn settle(&mut self) -> Option<u32> {
        if self.len == 0 {
            return None;
        }
        let last = self.q as usize - 1;
        loop {
            if self.counts[self.primary] == 0 {
                self.advance();
                continue;
            }
            let p = self.primary;
            let off = self.index[p].first().expect("primary count is positive");
            let slot = self.lists[p][off].head;
            if off == last && self.arena.node(slot).rank >= self.h + self.q {
                self.unlink(slot);
                let rank = self.arena.node(slot).rank;
                let (w, o, _) = self.place(rank);
                self.link(w, o, slot);
                continue;
            }
            return Some(slot);
        }
    }

    pub fn pop_min(&mut self) -> Option<(u64, T)> {
        let slot = self.settle()?;
        self.unlink(slot);
        self.len -= 1;
        Some(self.arena.release(slot))
    }

    /// Item that `pop_min` would return next, after any window housekeeping.
    pub fn front(&mut self) -> Option<(Handle, u64, &T)> {
        let slot = self.settle()?;
        let n = self.arena.node(slot);
        Some((
            self.arena.handle_of(slot),
            n.rank,
            n.item.as_ref().expect("live"),
        ))
    }

    fn bucket_min(&self, w: usize, off: usize) -> u64 {
        let mut min = u64::MAX;
        let mut s = self.lists[w][off].head;
        while s != NIL {
            let n = self.arena.node(s);
            min = min.min(n.rank);
            s = n.next;
        }
        min
    }

    fn window_min(&self, w: usize, base: u64) -> Option<u64> {
        let off = self.index[w].first_exact()?;
        if off + 1 < self.q as usize {
            Some(base + off as u64)
        } else {
            Some(self.bucket_min(w, off))
        }
    }

    /// Smallest rank held, across both windows and parked items.
    pub fn min_rank(&self) -> Option<u64> {
        let p = self.primary;
        let sec_min = || self.window_min(1 - p, self.h + self.q);
        match self.index[p].first_exact() {
            Some(off) if off + 1 < self.q as usize => Some(self.h + off as u64),
            Some(off) => {
                let m = self.bucket_min(p, off);
                Some(sec_min().map_or(m, |s| s.min(m)))
            }
            None => sec_min(),
        }
    }

    pub fn get(&self, h: Handle) -> Result<(u64, &T), QueueError> {
        let slot = self.arena.resolve(h)?;
        let n = self.arena.node(slot);
        Ok((n.rank, n.item.as_ref().expect("live")))
    }

    pub fn remove(&mut self, h: Handle) -> Result<(u64, T), QueueError> {
        let slot = self.arena.resolve(h)?;
        self.unlink(slot);
        self.len -= 1;
        Ok(self.arena.release(slot))
    }

    pub fn clear(&mut self) {
        for w in 0..2 {
            self.lists[w]
                .iter_mut()
                .for_each(|l| *l = FifoList::default());
            self.index[w].clear_all();
        }
        self.arena.clear();
        self.counts = [0, 0];
        self.len = 0;
    }

    /// Bucket counts agree with window counts and the total.
    pub fn is_consistent(&self) -> bool {
        (0..2)
            .all(|w| self.lists[w].iter().map(|l| l.len as usize).sum::<usize>() == self.counts[w])
            && self.counts[0] + self.counts[1] == self.len
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_examples() {
        let mut q = CffsQueue::new(8).unwrap();
        assert_eq!(q.insert_placed(6, ()).unwrap().1, Placement::Primary(6));
        assert_eq!(q.insert_placed(13, ()).unwrap().1, Placement::Secondary(5));
        assert_eq!(q.insert_placed(99, ()).unwrap().1, Placement::Overflow);
    }

    #[test]
    fn pops_primary_first_then_rotates() {
        let mut q = CffsQueue::new(8).unwrap();
        q.insert(10, 'b').unwrap();
        q.insert(3, 'a').unwrap();
        assert_eq!(q.pop_min(), Some((3, 'a')));
        assert_eq!(q.h_index(), 0);
        assert_eq!(q.pop_min(), Some((10, 'b')));
        assert_eq!(q.h_index(), 8);
        assert_eq!(q.pop_min(), None);
    }

    #[test]
    fn rotate_requires_empty_primary() {
        let mut q = CffsQueue::new(8).unwrap();
        q.insert(1, ()).unwrap();
        assert_eq!(q.rotate(), Err(QueueError::PrimaryNotEmpty));
        q.pop_min();
        q.rotate().unwrap();
        assert_eq!(q.h_index(), 8);
    }

    #[test]
    fn empty_insert_snaps_window() {
        let mut q = CffsQueue::new(8).unwrap();
        q.insert(1000, ()).unwrap();
        assert_eq!(q.h_index(), 1000 / 8 * 8);
        assert_eq!(
            q.insert(3, ()),
            Err(QueueError::StaleRank {
                rank: 3,
                base: 1000
            })
        );
    }

    #[test]
    fn parked_item_survives_rotations() {
        let mut q = CffsQueue::new(8).unwrap();
        q.insert(1, 'a').unwrap();
        q.insert(99, 'z').unwrap();
        assert_eq!(q.pop_min(), Some((1, 'a')));
        assert_eq!(q.min_rank(), Some(99));
        q.insert(20, 'm').unwrap();
        assert_eq!(q.pop_min(), Some((20, 'm')));
        assert_eq!(q.pop_min(), Some((99, 'z')));
        assert!(q.h_index() <= 96);
        assert!(q.is_consistent());
    }

    #[test]
    fn parked_items_keep_fifo() {
        let mut q = CffsQueue::new(8).unwrap();
        q.insert(0, 0).unwrap();
        for (i, r) in [50u64, 40, 60].into_iter().enumerate() {
            q.insert(r, i + 1).unwrap();
        }
        let out: Vec<_> = std::iter::from_fn(|| q.pop_min()).collect();
        assert_eq!(out[0], (0, 0));
        assert_eq!(
            out.iter().map(|x| x.0).collect::<Vec<_>>(),
            vec![0, 40, 50, 60]
        );
    }

    #[test]
    fn min_rank_sees_parked_and_secondary() {
        let mut q = CffsQueue::new(8).unwrap();
        q.insert(7, ()).unwrap();
        q.insert(30, ()).unwrap();
        assert_eq!(q.min_rank(), Some(7));
        q.pop_min();
        assert_eq!(q.min_rank(), Some(30));
        q.insert(9, ()).unwrap();
        assert_eq!(q.min_rank(), Some(9));
    }

    #[test]
    fn front_does_not_remove() {
        let mut q = CffsQueue::new(4).unwrap();
        q.insert(5, 'x').unwrap();
        let (h, r, _) = q.front().map(|(h, r, t)| (h, r, *t)).unwrap();
        assert_eq!(r, 5);
        assert_eq!(q.len(), 1);
        assert_eq!(q.remove(h), Ok((5, 'x')));
    }

    #[test]
    fn approx_window_full_occupancy_is_ordered() {
        let mut q = CircularApproxQueue::new(256).unwrap();
        for r in 0..512u64 {
            q.insert(r, r).unwrap();
        }
        let out: Vec<u64> = std::iter::from_fn(|| q.pop_min().map(|x| x.0)).collect();
        assert_eq!(out.len(), 512);
        assert!(out.windows(2).all(|w| w[0] <= w[1]));
    }
}
