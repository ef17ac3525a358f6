//! Find-first-set bucketed queues over a fixed rank range `[0, N)`.
//!
//! The occupancy of the buckets is mirrored in a bitmap hierarchy. Finding
//! the minimum walks one word per level, always taking the lowest set bit.

use crate::arena::{Arena, FifoList, Handle, NIL};
use crate::error::QueueError;

/// Index of the lowest set bit, or `None` for a zero word.
#[inline]
pub fn find_first_set_word(word: u64) -> Option<u32> {
    if word == 0 {
        None
    } else {
        Some(word.trailing_zeros())
    }
}

/// Index of the highest set bit, or `None` for a zero word.
#[inline]
pub fn find_last_set_word(word: u64) -> Option<u32> {
    if word == 0 {
        None
    } else {
        Some(63 - word.leading_zeros())
    }
}

/// Construction parameters for the bucketed queues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueConfig {
    pub num_buckets: usize,
    /// Bits per machine word used by the bitmap, a power of two up to 64.
    pub word_width: u32,
    /// Rank units per bucket. The queue itself indexes buckets directly;
    /// callers use [`QueueConfig::bucket_of`] to map raw ranks.
    pub granularity: u64,
}

impl QueueConfig {
    pub fn new(num_buckets: usize) -> Self {
        Self {
            num_buckets,
            word_width: 64,
            granularity: 1,
        }
    }

    pub fn with_word_width(mut self, w: u32) -> Self {
        self.word_width = w;
        self
    }

    pub fn with_granularity(mut self, g: u64) -> Self {
        self.granularity = g;
        self
    }

    pub fn bucket_of(&self, raw_rank: u64) -> u64 {
        raw_rank / self.granularity
    }

    pub fn validate(&self) -> Result<(), QueueError> {
        if self.num_buckets == 0 {
            return Err(QueueError::InvalidConfig(
                "num_buckets must be positive".into(),
            ));
        }
        if self.num_buckets >= NIL as usize {
            return Err(QueueError::InvalidConfig("num_buckets too large".into()));
        }
        if !(1..=64).contains(&self.word_width) || !self.word_width.is_power_of_two() {
            return Err(QueueError::InvalidConfig(format!(
                "word_width {} is not a power of two in 1..=64",
                self.word_width
            )));
        }
        if self.granularity == 0 {
            return Err(QueueError::InvalidConfig(
                "granularity must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Hierarchical occupancy bitmap. Level 0 holds one bit per bucket; each
/// higher level holds one bit per word of the level below.
#[derive(Debug, Clone)]
pub struct OccupancyBitmap {
    levels: Vec<Vec<u64>>,
    shift: u32,
    mask: u64,
    len: usize,
}

impl OccupancyBitmap {
    pub fn new(len: usize, word_width: u32) -> Self {
        assert!(word_width.is_power_of_two() && word_width <= 64);
        let shift = word_width.trailing_zeros();
        let w = word_width as usize;
        let mut levels = Vec::new();
        let mut n = len.max(1);
        loop {
            let words = n.div_ceil(w);
            levels.push(vec![0u64; words]);
            if words == 1 {
                break;
            }
            n = words;
        }
        Self {
            levels,
            shift,
            mask: (word_width as u64) - 1,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.levels.last().map_or(true, |top| top[0] == 0)
    }

    /// Number of levels, which is also the number of words read by [`first`](Self::first).
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Vec<u64>] {
        &self.levels
    }

    pub fn get(&self, i: usize) -> bool {
        let w = self.levels[0][i >> self.shift];
        w >> (i as u64 & self.mask) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        let mut idx = i;
        for level in self.levels.iter_mut() {
            let word = &mut level[idx >> self.shift];
            let was_zero = *word == 0;
            *word |= 1u64 << (idx as u64 & self.mask);
            if !was_zero {
                break;
            }
            idx >>= self.shift;
        }
    }

    pub fn clear(&mut self, i: usize) {
        debug_assert!(i < self.len);
        let mut idx = i;
        for level in self.levels.iter_mut() {
            let word = &mut level[idx >> self.shift];
            *word &= !(1u64 << (idx as u64 & self.mask));
            if *word != 0 {
                break;
            }
            idx >>= self.shift;
        }
    }

    pub fn clear_all(&mut self) {
        for level in &mut self.levels {
            level.iter_mut().for_each(|w| *w = 0);
        }
    }

    /// Lowest set index, walking down from the top level.
    #[inline]
    pub fn first(&self) -> Option<usize> {
        let mut idx = 0usize;
        for level in self.levels.iter().rev() {
            let bit = find_first_set_word(level[idx])? as usize;
            idx = (idx << self.shift) | bit;
        }
        Some(idx)
    }

    /// Highest set index.
    pub fn last(&self) -> Option<usize> {
        let mut idx = 0usize;
        for level in self.levels.iter().rev() {
            let bit = find_last_set_word(level[idx])? as usize;
            idx = (idx << self.shift) | bit;
        }
        Some(idx)
    }

    /// Recomputes every summary level from the leaves and compares.
    pub fn is_consistent(&self) -> bool {
        let w = 1usize << self.shift;
        for k in 1..self.levels.len() {
            let below = &self.levels[k - 1];
            for (j, &word) in self.levels[k].iter().enumerate() {
                let mut expect = 0u64;
                for b in 0..w {
                    let child = j * w + b;
                    if child < below.len() && below[child] != 0 {
                        expect |= 1 << b;
                    }
                }
                if word != expect {
                    return false;
                }
            }
        }
        // No stray bits past the end of the leaf range.
        let leaf = &self.levels[0];
        (self.len..leaf.len() << self.shift)
            .all(|i| leaf[i >> self.shift] >> (i as u64 & self.mask) & 1 == 0)
    }
}

/// Hierarchical FFS queue with FIFO buckets over `[0, num_buckets)`.
#[derive(Debug)]
pub struct HffsQueue<T> {
    config: QueueConfig,
    buckets: Vec<FifoList>,
    bitmap: OccupancyBitmap,
    arena: Arena<T>,
    len: usize,
}

impl<T> HffsQueue<T> {
    pub fn new(config: QueueConfig) -> Result<Self, QueueError> {
        config.validate()?;
        Ok(Self {
            config,
            buckets: vec![FifoList::default(); config.num_buckets],
            bitmap: OccupancyBitmap::new(config.num_buckets, config.word_width),
            arena: Arena::default(),
            len: 0,
        })
    }

    /// Queue with `n` buckets and 64-bit words.
    pub fn with_buckets(n: usize) -> Result<Self, QueueError> {
        Self::new(QueueConfig::new(n))
    }

    pub fn config(&self) -> &QueueConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_buckets(&self) -> usize {
        self.config.num_buckets
    }

    pub fn bitmap(&self) -> &OccupancyBitmap {
        &self.bitmap
    }

    /// Words read by one `pop_min`, equal to the bitmap depth.
    pub fn probes_per_pop(&self) -> usize {
        self.bitmap.depth()
    }

    pub fn bucket_len(&self, rank: usize) -> usize {
        self.buckets[rank].len as usize
    }

    pub fn insert(&mut self, rank: u64, item: T) -> Result<Handle, QueueError> {
        let n = self.config.num_buckets as u64;
        if rank >= n {
            return Err(QueueError::RankOutOfRange { rank, lo: 0, hi: n });
        }
        let b = rank as usize;
        let h = self.arena.alloc(rank, item, b as u32, 0);
        let slot = self.arena.resolve(h).expect("fresh handle");
        if self.buckets[b].is_empty() {
            self.bitmap.set(b);
        }
        self.buckets[b].push_back(&mut self.arena, slot);
        self.len += 1;
        Ok(h)
    }

    pub fn pop_min(&mut self) -> Option<(u64, T)> {
        let b = self.bitmap.first()?;
        let slot = self.buckets[b]
            .pop_front(&mut self.arena)
            .expect("set bit means nonempty");
        if self.buckets[b].is_empty() {
            self.bitmap.clear(b);
        }
        self.len -= 1;
        Some(self.arena.release(slot))
    }

    pub fn min_rank(&self) -> Option<u64> {
        self.bitmap.first().map(|b| b as u64)
    }

    /// Head of the minimum bucket without removing it.
    pub fn peek_min(&self) -> Option<(Handle, u64, &T)> {
        let b = self.bitmap.first()?;
        let slot = self.buckets[b].head;
        let n = self.arena.node(slot);
        Some((
            self.arena.handle_of(slot),
            n.rank,
            n.item.as_ref().expect("live"),
        ))
    }

    pub fn get(&self, h: Handle) -> Result<(u64, &T), QueueError> {
        let slot = self.arena.resolve(h)?;
        let n = self.arena.node(slot);
        Ok((n.rank, n.item.as_ref().expect("live")))
    }

    pub fn remove(&mut self, h: Handle) -> Result<(u64, T), QueueError> {
        let slot = self.arena.resolve(h)?;
        let b = self.arena.node(slot).bucket as usize;
        self.buckets[b].unlink(&mut self.arena, slot);
        if self.buckets[b].is_empty() {
            self.bitmap.clear(b);
        }
        self.len -= 1;
        Ok(self.arena.release(slot))
    }

    /// Checks that bucket occupancy and every bitmap level agree.
    pub fn is_consistent(&self) -> bool {
        self.bitmap.is_consistent()
            && self
                .buckets
                .iter()
                .enumerate()
                .all(|(i, b)| self.bitmap.get(i) == !b.is_empty())
            && self.buckets.iter().map(|b| b.len as usize).sum::<usize>() == self.len
    }
}
