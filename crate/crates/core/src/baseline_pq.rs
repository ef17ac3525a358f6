//! Reference queues: buckets indexed by a binary heap (BH), a plain
//! comparison heap, and a timing wheel.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::arena::{Arena, FifoList, Handle, NIL};
use crate::error::QueueError;

/// Min-heap of bucket indices with position tracking for O(log n) removal.
#[derive(Debug, Clone)]
struct IndexedHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

impl IndexedHeap {
    fn new(n: usize) -> Self {
        Self {
            heap: Vec::new(),
            pos: vec![NIL; n],
        }
    }

    fn peek(&self) -> Option<u32> {
        self.heap.first().copied()
    }

    fn contains(&self, b: u32) -> bool {
        self.pos[b as usize] != NIL
    }

    fn push(&mut self, b: u32) {
        debug_assert!(!self.contains(b));
        self.heap.push(b);
        let i = self.heap.len() - 1;
        self.pos[b as usize] = i as u32;
        self.sift_up(i);
    }

    fn remove(&mut self, b: u32) {
        let i = self.pos[b as usize] as usize;
        let last = self.heap.len() - 1;
        self.swap(i, last);
        self.heap.pop();
        self.pos[b as usize] = NIL;
        if i < self.heap.len() {
            self.sift_down(i);
            self.sift_up(i);
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i] as usize] = i as u32;
        self.pos[self.heap[j] as usize] = j as u32;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let p = (i - 1) / 2;
            if self.heap[p] <= self.heap[i] {
                break;
            }
            self.swap(i, p);
            i = p;
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && self.heap[r] < self.heap[l] {
                r
            } else {
                l
            };
            if self.heap[i] <= self.heap[c] {
                break;
            }
            self.swap(i, c);
            i = c;
        }
    }

    fn is_valid(&self) -> bool {
        self.heap.iter().enumerate().all(|(i, &b)| {
            self.pos[b as usize] == i as u32 && (i == 0 || self.heap[(i - 1) / 2] <= b)
        })
    }
}

/// Bucketed min-queue whose nonempty bucket indices sit in a binary heap.
#[derive(Debug)]
pub struct BhQueue<T> {
    buckets: Vec<FifoList>,
    heap: IndexedHeap,
    arena: Arena<T>,
    len: usize,
}

impl<T> BhQueue<T> {
    pub fn new(num_buckets: usize) -> Result<Self, QueueError> {
        if num_buckets == 0 || num_buckets >= NIL as usize {
            return Err(QueueError::InvalidConfig(format!(
                "num_buckets {num_buckets} out of range"
            )));
        }
        Ok(Self {
            buckets: vec![FifoList::default(); num_buckets],
            heap: IndexedHeap::new(num_buckets),
            arena: Arena::default(),
            len: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn insert(&mut self, rank: u64, item: T) -> Result<Handle, QueueError> {
        let n = self.buckets.len() as u64;
        if rank >= n {
            return Err(QueueError::RankOutOfRange { rank, lo: 0, hi: n });
        }
        let b = rank as usize;
        let h = self.arena.alloc(rank, item, b as u32, 0);
        let slot = self.arena.resolve(h).expect("fresh handle");
        if self.buckets[b].is_empty() {
            self.heap.push(b as u32);
        }
        self.buckets[b].push_back(&mut self.arena, slot);
        self.len += 1;
        Ok(h)
    }

    pub fn pop_min(&mut self) -> Option<(u64, T)> {
        let b = self.heap.peek()? as usize;
        let slot = self.buckets[b]
            .pop_front(&mut self.arena)
            .expect("heap holds nonempty buckets");
        if self.buckets[b].is_empty() {
            self.heap.remove(b as u32);
        }
        self.len -= 1;
        Some(self.arena.release(slot))
    }

    pub fn min_rank(&self) -> Option<u64> {
        self.heap.peek().map(u64::from)
    }

    pub fn peek_min(&self) -> Option<(Handle, u64, &T)> {
        let b = self.heap.peek()? as usize;
        let slot = self.buckets[b].head;
        let n = self.arena.node(slot);
        Some((
            self.arena.handle_of(slot),
            n.rank,
            n.item.as_ref().expect("live"),
        ))
    }

    pub fn remove(&mut self, h: Handle) -> Result<(u64, T), QueueError> {
        let slot = self.arena.resolve(h)?;
        let b = self.arena.node(slot).bucket as usize;
        self.buckets[b].unlink(&mut self.arena, slot);
        if self.buckets[b].is_empty() {
            self.heap.remove(b as u32);
        }
        self.len -= 1;
        Ok(self.arena.release(slot))
    }

    /// Heap holds exactly the nonempty buckets, each once, in heap order.
    pub fn is_consistent(&self) -> bool {
        self.heap.is_valid()
            && self
                .buckets
                .iter()
                .enumerate()
                .all(|(i, b)| self.heap.contains(i as u32) == !b.is_empty())
    }
}

#[derive(Debug)]
struct HeapEntry<T> {
    rank: u64,
    seq: u64,
    item: T,
}

impl<T> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        (self.rank, self.seq) == (other.rank, other.seq)
    }
}

impl<T> Eq for HeapEntry<T> {}

impl<T> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for HeapEntry<T> {
    // Reversed so the std max-heap pops the smallest (rank, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        (other.rank, other.seq).cmp(&(self.rank, self.seq))
    }
}

/// Comparison-based min-heap with FIFO ties.
#[derive(Debug)]
pub struct HeapQueue<T> {
    heap: BinaryHeap<HeapEntry<T>>,
    seq: u64,
}

impl<T> Default for HeapQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> HeapQueue<T> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            seq: 0,
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            heap: BinaryHeap::with_capacity(n),
            seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn insert(&mut self, rank: u64, item: T) {
        self.heap.push(HeapEntry {
            rank,
            seq: self.seq,
            item,
        });
        self.seq += 1;
    }

    pub fn pop_min(&mut self) -> Option<(u64, T)> {
        self.heap.pop().map(|e| (e.rank, e.item))
    }

    pub fn min_rank(&self) -> Option<u64> {
        self.heap.peek().map(|e| e.rank)
    }
}

/// Default timing-wheel slot width: 100µs.
pub const TW_DEFAULT_GRANULARITY_NS: u64 = 100_000;
/// Default slot count: 20k slots, a 2 s horizon at the default granularity.
pub const TW_DEFAULT_SLOTS: usize = 20_000;

/// Single-level timing wheel. Items are released slot by slot as the
/// cursor moves; there is no ordering inside a slot beyond FIFO.
#[derive(Debug)]
pub struct TimingWheel<T> {
    slots: Vec<VecDeque<(u64, T)>>,
    /// Items whose slot had already been passed when they were inserted.
    overdue: VecDeque<(u64, T)>,
    granularity: u64,
    /// Absolute tick of the cursor; every tick below it has been released.
    cursor: u64,
    len: usize,
}

impl<T> TimingWheel<T> {
    pub fn new(num_slots: usize, granularity_ns: u64) -> Result<Self, QueueError> {
        if num_slots == 0 || granularity_ns == 0 {
            return Err(QueueError::InvalidConfig(
                "timing wheel needs slots and a granularity".into(),
            ));
        }
        Ok(Self {
            slots: (0..num_slots).map(|_| VecDeque::new()).collect(),
            overdue: VecDeque::new(),
            granularity: granularity_ns,
            cursor: 0,
            len: 0,
        })
    }

    pub fn with_defaults() -> Self {
        Self::new(TW_DEFAULT_SLOTS, TW_DEFAULT_GRANULARITY_NS).expect("valid defaults")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn granularity(&self) -> u64 {
        self.granularity
    }

    pub fn horizon(&self) -> u64 {
        self.slots.len() as u64 * self.granularity
    }

    /// Time of the cursor slot.
    pub fn now(&self) -> u64 {
        self.cursor * self.granularity
    }

    /// Files `item` under the slot containing `ts`. Timestamps whose slot
    /// has already been passed are released by the next `advance`.
    pub fn insert(&mut self, ts: u64, item: T) -> Result<(), QueueError> {
        let tick = ts / self.granularity;
        if tick < self.cursor {
            self.overdue.push_back((ts, item));
            self.len += 1;
            return Ok(());
        }
        let n = self.slots.len() as u64;
        if tick >= self.cursor + n {
            return Err(QueueError::BeyondHorizon {
                ts,
                horizon_end: (self.cursor + n) * self.granularity,
            });
        }
        self.slots[(tick % n) as usize].push_back((ts, item));
        self.len += 1;
        Ok(())
    }

    /// Releases, in slot order, every item whose slot starts at or before `now`.
    pub fn advance(&mut self, now: u64) -> Vec<(u64, T)> {
        let mut out = Vec::new();
        self.advance_into(now, &mut out);
        out
    }

    pub fn advance_into(&mut self, now: u64, out: &mut Vec<(u64, T)>) {
        let target = now / self.granularity;
        let n = self.slots.len() as u64;
        self.len -= self.overdue.len();
        out.extend(self.overdue.drain(..));
        while self.cursor <= target {
            if self.len == 0 {
                self.cursor = target + 1;
                break;
            }
            let slot = &mut self.slots[(self.cursor % n) as usize];
            self.len -= slot.len();
            out.extend(slot.drain(..));
            self.cursor += 1;
        }
    }
}
