//! Gradient queues: the index of the highest nonempty bucket is recovered
//! from two running sums instead of a bitmap walk.
//!
//! With weights `2^(i/α)` the sums are `a = Σ 2^(i/α)` and
//! `b = Σ i·2^(i/α)` over nonempty buckets. For `α = 1` the maximum index is
//! exactly `ceil(b/a)`. For larger `α` the ratio lags the maximum by roughly
//! `|u(α)|` buckets; the shifted ratio is used as a first guess followed by a
//! short linear search.

use crate::arena::{Arena, FifoList, Handle};
use crate::error::QueueError;

/// Default damping factor.
pub const DEFAULT_ALPHA: u32 = 16;
/// Weight cut-off used to place the lowest valid bucket.
pub const DEFAULT_G_THRESHOLD: f64 = 4.5e-3;
/// `imax / α` for the default layout (647 at α = 16).
pub const IMAX_PER_ALPHA: f64 = 40.4375;
/// Largest exact (α = 1) queue that keeps `ceil(b/a)` exact in `f64`.
pub const EXACT_MAX_BUCKETS: usize = 52;

/// `u(α) = 1 / (1 − 2^(1/α))`. Always negative for α ≥ 1.
pub fn shift_u(alpha: u32) -> f64 {
    1.0 / (1.0 - (1.0 / alpha as f64).exp2())
}

/// `g(α, M) = 2^(−(M+1)/α)`, the relative weight of bucket 0 against bucket `M`.
pub fn decay_g(alpha: u32, m: usize) -> f64 {
    (-((m + 1) as f64) / alpha as f64).exp2()
}

/// Valid index window of an approximate gradient queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxRange {
    pub alpha: u32,
    pub i0: usize,
    pub imax: usize,
    /// `u(α)`, negative.
    pub shift: f64,
}

impl ApproxRange {
    pub fn new(alpha: u32, i0: usize, imax: usize) -> Result<Self, QueueError> {
        if alpha == 0 {
            return Err(QueueError::InvalidConfig("alpha must be positive".into()));
        }
        if i0 > imax {
            return Err(QueueError::InvalidConfig(format!(
                "i0 {i0} above imax {imax}"
            )));
        }
        if imax as f64 / alpha as f64 > 53.0 {
            return Err(QueueError::InvalidConfig(format!(
                "2^(imax/alpha) = 2^{} exceeds double precision",
                imax as f64 / alpha as f64
            )));
        }
        Ok(Self {
            alpha,
            i0,
            imax,
            shift: shift_u(alpha),
        })
    }

    /// Default layout for `alpha`: `i0` from the weight threshold and
    /// `imax = floor(40.4375·α)`.
    pub fn for_alpha(alpha: u32) -> Result<Self, QueueError> {
        Self::with_threshold(alpha, DEFAULT_G_THRESHOLD)
    }

    pub fn with_threshold(alpha: u32, threshold: f64) -> Result<Self, QueueError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(QueueError::InvalidConfig(format!(
                "threshold {threshold} not in (0, 1)"
            )));
        }
        if alpha == 0 {
            return Err(QueueError::InvalidConfig("alpha must be positive".into()));
        }
        let i0 = lowest_index(alpha, threshold);
        let imax = (IMAX_PER_ALPHA * alpha as f64).floor() as usize;
        Self::new(alpha, i0, imax)
    }

    /// Smallest default layout whose span holds `n` buckets, trimmed so the
    /// span is exactly `n`.
    pub fn for_buckets(n: usize) -> Result<Self, QueueError> {
        if n == 0 {
            return Err(QueueError::InvalidConfig("need at least one bucket".into()));
        }
        let mut alpha = ((n as f64 / 32.0).floor() as u32).max(1);
        loop {
            let r = Self::for_alpha(alpha)?;
            if r.span() >= n {
                return Self::new(alpha, r.i0, r.i0 + n - 1);
            }
            alpha += 1;
        }
    }

    /// `imax − i0`.
    pub fn capacity(&self) -> usize {
        self.imax - self.i0
    }

    /// Number of valid indices, `imax − i0 + 1`.
    pub fn span(&self) -> usize {
        self.imax - self.i0 + 1
    }

    /// Whole-bucket part of `|u(α)|`.
    pub fn integer_shift(&self) -> usize {
        (-self.shift).trunc() as usize
    }

    /// Maps a min-oriented priority onto an internal index: `p_base` lands on
    /// `imax` and larger priorities move down towards `i0`.
    pub fn mirror(&self, p: u64, p_base: u64) -> Result<usize, QueueError> {
        let hi = p_base + self.capacity() as u64;
        if p < p_base || p > hi {
            return Err(QueueError::RankOutOfRange {
                rank: p,
                lo: p_base,
                hi: hi + 1,
            });
        }
        Ok(self.imax - (p - p_base) as usize)
    }

    pub fn unmirror(&self, idx: usize, p_base: u64) -> u64 {
        p_base + (self.imax - idx) as u64
    }
}

fn lowest_index(alpha: u32, threshold: f64) -> usize {
    // Smallest M with 2^(-(M+1)/α) ≤ threshold.
    let mut m = ((-threshold.log2()) * alpha as f64).ceil() as usize;
    m = m.saturating_sub(1);
    while m > 0 && decay_g(alpha, m - 1) <= threshold {
        m -= 1;
    }
    while decay_g(alpha, m) > threshold {
        m += 1;
    }
    m
}

/// The `(a, b)` accumulators plus the occupancy bits they summarize.
#[derive(Debug, Clone)]
pub struct CurvatureState {
    alpha: u32,
    a: f64,
    b: f64,
    weight: Vec<f64>,
    weighted_index: Vec<f64>,
    occ: Vec<u64>,
    nonempty: usize,
}

impl CurvatureState {
    /// State for indices `0..len` with weights `2^(i/α)`.
    pub fn new(alpha: u32, len: usize) -> Self {
        let weight: Vec<f64> = (0..len).map(|i| (i as f64 / alpha as f64).exp2()).collect();
        let weighted_index = weight
            .iter()
            .enumerate()
            .map(|(i, w)| i as f64 * w)
            .collect();
        Self {
            alpha,
            a: 0.0,
            b: 0.0,
            weight,
            weighted_index,
            occ: vec![0; len.div_ceil(64)],
            nonempty: 0,
        }
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nonempty == 0
    }

    pub fn nonempty_count(&self) -> usize {
        self.nonempty
    }

    #[inline]
    pub fn is_set(&self, i: usize) -> bool {
        self.occ[i >> 6] >> (i & 63) & 1 == 1
    }

    /// Records bucket `i` turning nonempty (`true`) or empty (`false`).
    pub fn mark(&mut self, i: usize, nonempty: bool) -> Result<(), QueueError> {
        if i >= self.len() {
            return Err(QueueError::RankOutOfRange {
                rank: i as u64,
                lo: 0,
                hi: self.len() as u64,
            });
        }
        if self.is_set(i) == nonempty {
            return Err(QueueError::StateConflict { index: i, nonempty });
        }
        self.occ[i >> 6] ^= 1 << (i & 63);
        if nonempty {
            self.a += self.weight[i];
            self.b += self.weighted_index[i];
            self.nonempty += 1;
        } else {
            self.nonempty -= 1;
            if self.nonempty == 0 {
                self.a = 0.0;
                self.b = 0.0;
            } else {
                self.a -= self.weight[i];
                self.b -= self.weighted_index[i];
            }
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.occ.iter_mut().for_each(|w| *w = 0);
        self.a = 0.0;
        self.b = 0.0;
        self.nonempty = 0;
    }

    /// `b / a`, or `None` when empty.
    pub fn ratio(&self) -> Option<f64> {
        (self.nonempty > 0).then(|| self.b / self.a)
    }

    /// `ceil(b/a)`. Exact for α = 1 within [`EXACT_MAX_BUCKETS`].
    pub fn max_index_exact(&self) -> Option<usize> {
        debug_assert_eq!(self.alpha, 1, "exact lookup needs alpha = 1");
        self.ratio().map(|r| r.ceil() as usize)
    }

    /// Sums recomputed from the occupancy bits.
    pub fn recompute(&self) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..self.len() {
            if self.is_set(i) {
                a += self.weight[i];
                b += self.weighted_index[i];
            }
        }
        (a, b)
    }

    /// Replaces the running sums with a fresh recomputation.
    pub fn resync(&mut self) {
        let (a, b) = self.recompute();
        self.a = a;
        self.b = b;
    }

    /// Highest set index, by word scan.
    pub fn highest_set(&self) -> Option<usize> {
        self.occ
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(wi, w)| wi * 64 + 63 - w.leading_zeros() as usize)
    }

    /// Lowest set index, by word scan.
    pub fn lowest_set(&self) -> Option<usize> {
        self.occ
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(wi, w)| wi * 64 + w.trailing_zeros() as usize)
    }

    /// Highest set index in `[lo, from]`.
    pub fn scan_down(&self, from: usize, lo: usize) -> Option<usize> {
        if from < lo {
            return None;
        }
        let mut wi = from >> 6;
        let b = from & 63;
        let mut word = self.occ[wi] & if b == 63 { !0 } else { (1u64 << (b + 1)) - 1 };
        loop {
            if word != 0 {
                let i = wi * 64 + 63 - word.leading_zeros() as usize;
                return (i >= lo).then_some(i);
            }
            if wi == 0 || wi * 64 <= lo {
                return None;
            }
            wi -= 1;
            word = self.occ[wi];
        }
    }

    /// Lowest set index in `[from, hi]`.
    pub fn scan_up(&self, from: usize, hi: usize) -> Option<usize> {
        if from > hi || from >= self.len() {
            return None;
        }
        let mut wi = from >> 6;
        let mut word = self.occ[wi] & (!0u64 << (from & 63));
        loop {
            if word != 0 {
                let i = wi * 64 + word.trailing_zeros() as usize;
                return (i <= hi).then_some(i);
            }
            wi += 1;
            if wi >= self.occ.len() || wi * 64 > hi {
                return None;
            }
            word = self.occ[wi];
        }
    }
}

/// How the shifted ratio is turned into a bucket index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    /// `round(b/a + |u|)`.
    #[default]
    Nearest,
    /// `ceil(b/a) + trunc(|u|)`.
    Ceil,
}

/// Counters kept by the approximate lookup.
#[derive(Debug, Clone, Default)]
pub struct ApproxStats {
    pub lookups: u64,
    /// Lookups whose estimate hit a nonempty bucket.
    pub hits: u64,
    /// Buckets inspected beyond the estimate, summed over lookups.
    pub search_len_total: u64,
    /// `|found − true max|` per lookup, recorded only while tracking.
    pub abs_errors: Vec<u32>,
    /// `estimate − true max` summed over tracked lookups.
    pub signed_estimate_error_total: i64,
}

impl ApproxStats {
    pub fn mean_search_len(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.search_len_total as f64 / self.lookups as f64
        }
    }

    pub fn mean_abs_error(&self) -> f64 {
        if self.abs_errors.is_empty() {
            0.0
        } else {
            self.abs_errors.iter().map(|&e| e as f64).sum::<f64>() / self.abs_errors.len() as f64
        }
    }

    pub fn p99_abs_error(&self) -> f64 {
        percentile_u32(&self.abs_errors, 0.99)
    }
}

pub(crate) fn percentile_u32(v: &[u32], p: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_unstable();
    let idx = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1;
    s[idx] as f64
}

/// Result of one maximum lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Located {
    pub estimate: usize,
    pub found: usize,
    pub search_len: usize,
}

/// Occupancy index answering "highest nonempty bucket" queries.
#[derive(Debug, Clone)]
pub struct GradientIndex {
    range: ApproxRange,
    curv: CurvatureState,
    rounding: Rounding,
    tracking: bool,
    stats: ApproxStats,
}

impl GradientIndex {
    /// Exact index over `0..n` (α = 1).
    pub fn exact(n: usize) -> Result<Self, QueueError> {
        if n == 0 || n > EXACT_MAX_BUCKETS {
            return Err(QueueError::InvalidConfig(format!(
                "exact gradient queue supports 1..={EXACT_MAX_BUCKETS} buckets, got {n}"
            )));
        }
        Ok(Self::from_range(ApproxRange::new(1, 0, n - 1)?))
    }

    pub fn approximate(range: ApproxRange) -> Self {
        Self::from_range(range)
    }

    fn from_range(range: ApproxRange) -> Self {
        Self {
            range,
            curv: CurvatureState::new(range.alpha, range.imax + 1),
            rounding: Rounding::default(),
            tracking: false,
            stats: ApproxStats::default(),
        }
    }

    pub fn range(&self) -> &ApproxRange {
        &self.range
    }

    pub fn curvature(&self) -> &CurvatureState {
        &self.curv
    }

    pub fn is_exact(&self) -> bool {
        self.range.alpha == 1
    }

    pub fn set_rounding(&mut self, r: Rounding) {
        self.rounding = r;
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    /// Enables error recording against the true maximum (costs a word scan per lookup).
    pub fn set_tracking(&mut self, on: bool) {
        self.tracking = on;
    }

    pub fn stats(&self) -> &ApproxStats {
        &self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = ApproxStats::default();
    }

    pub fn is_empty(&self) -> bool {
        self.curv.is_empty()
    }

    pub fn mark(&mut self, i: usize, nonempty: bool) -> Result<(), QueueError> {
        if i < self.range.i0 || i > self.range.imax {
            return Err(QueueError::RankOutOfRange {
                rank: i as u64,
                lo: self.range.i0 as u64,
                hi: self.range.imax as u64 + 1,
            });
        }
        self.curv.mark(i, nonempty)
    }

    pub fn clear(&mut self) {
        self.curv.clear();
    }

    /// First guess for the highest nonempty index, clamped to the valid range.
    pub fn estimate(&self) -> Option<usize> {
        let ratio = self.curv.ratio()?;
        let raw = if self.is_exact() {
            ratio.ceil()
        } else {
            match self.rounding {
                // Nonnegative after the shift, so the truncating cast below rounds.
                Rounding::Nearest => ratio - self.range.shift + 0.5,
                Rounding::Ceil => ratio.ceil() + self.range.integer_shift() as f64,
            }
        };
        // Casts saturate, so the clamp also covers NaN and negatives.
        Some((raw as usize).clamp(self.range.i0, self.range.imax))
    }

    /// Estimate, then search downward and, failing that, upward.
    pub fn locate_max(&mut self) -> Option<Located> {
        let est = self.estimate()?;
        let (lo, hi) = (self.range.i0, self.range.imax);
        let (found, search_len) = if self.curv.is_set(est) {
            (est, 0)
        } else if let Some(f) = self.curv.scan_down(est, lo) {
            (f, est - f)
        } else {
            let f = self
                .curv
                .scan_up(est, hi)
                .expect("nonempty curvature state has a set bit");
            (f, (est - lo) + (f - est))
        };
        self.stats.lookups += 1;
        if search_len == 0 {
            self.stats.hits += 1;
        }
        self.stats.search_len_total += search_len as u64;
        if self.tracking {
            let truth = self.curv.highest_set().expect("nonempty");
            self.stats.abs_errors.push(truth.abs_diff(found) as u32);
            self.stats.signed_estimate_error_total += est as i64 - truth as i64;
        }
        Some(Located {
            estimate: est,
            found,
            search_len,
        })
    }

    pub fn true_max(&self) -> Option<usize> {
        self.curv.highest_set()
    }

    pub fn true_min(&self) -> Option<usize> {
        self.curv.lowest_set()
    }
}

/// Bucketed max-queue driven by a [`GradientIndex`].
#[derive(Debug)]
pub struct GradientQueue<T> {
    index: GradientIndex,
    buckets: Vec<FifoList>,
    arena: Arena<T>,
    len: usize,
}

impl<T> GradientQueue<T> {
    /// Exact queue over `0..n`, `n ≤ 52`.
    pub fn exact(n: usize) -> Result<Self, QueueError> {
        Ok(Self::with_index(GradientIndex::exact(n)?))
    }

    /// Approximate queue over `[range.i0, range.imax]`.
    pub fn approximate(range: ApproxRange) -> Self {
        Self::with_index(GradientIndex::approximate(range))
    }

    fn with_index(index: GradientIndex) -> Self {
        let n = index.range().imax + 1;
        Self {
            index,
            buckets: vec![FifoList::default(); n],
            arena: Arena::default(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn range(&self) -> &ApproxRange {
        self.index.range()
    }

    pub fn index(&self) -> &GradientIndex {
        &self.index
    }

    pub fn index_mut(&mut self) -> &mut GradientIndex {
        &mut self.index
    }

    pub fn insert(&mut self, idx: usize, item: T) -> Result<Handle, QueueError> {
        let r = *self.index.range();
        if idx < r.i0 || idx > r.imax {
            return Err(QueueError::RankOutOfRange {
                rank: idx as u64,
                lo: r.i0 as u64,
                hi: r.imax as u64 + 1,
            });
        }
        let h = self.arena.alloc(idx as u64, item, idx as u32, 0);
        let slot = self.arena.resolve(h).expect("fresh handle");
        if self.buckets[idx].is_empty() {
            self.index.mark(idx, true)?;
        }
        self.buckets[idx].push_back(&mut self.arena, slot);
        self.len += 1;
        Ok(h)
    }

    /// Pops the head of the bucket found by [`GradientIndex::locate_max`].
    pub fn pop_max(&mut self) -> Option<(usize, T)> {
        let loc = self.index.locate_max()?;
        Some(self.take_head(loc.found))
    }

    /// Same as [`pop_max`](Self::pop_max) but also reports the lookup.
    pub fn pop_max_located(&mut self) -> Option<(usize, T, Located)> {
        let loc = self.index.locate_max()?;
        let (i, t) = self.take_head(loc.found);
        Some((i, t, loc))
    }

    fn take_head(&mut self, b: usize) -> (usize, T) {
        let slot = self.buckets[b]
            .pop_front(&mut self.arena)
            .expect("located bucket is nonempty");
        if self.buckets[b].is_empty() {
            self.index.mark(b, false).expect("bucket was marked");
        }
        self.len -= 1;
        let (rank, item) = self.arena.release(slot);
        (rank as usize, item)
    }

    pub fn remove(&mut self, h: Handle) -> Result<(usize, T), QueueError> {
        let slot = self.arena.resolve(h)?;
        let b = self.arena.node(slot).bucket as usize;
        self.buckets[b].unlink(&mut self.arena, slot);
        if self.buckets[b].is_empty() {
            self.index.mark(b, false)?;
        }
        self.len -= 1;
        let (rank, item) = self.arena.release(slot);
        Ok((rank as usize, item))
    }

    pub fn bucket_len(&self, i: usize) -> usize {
        self.buckets[i].len as usize
    }
}

/// Occupancy patterns with known behavior, over a sub-span of a range.
pub mod presets {
    use super::ApproxRange;

    /// Every bucket in `[i0, imax]`.
    pub fn all_full(r: &ApproxRange) -> Vec<usize> {
        (r.i0..=r.imax).collect()
    }

    /// Every α-th bucket, ending at `imax`.
    pub fn even_spacing(r: &ApproxRange) -> Vec<usize> {
        let step = r.alpha as usize;
        let mut v: Vec<usize> = (0..)
            .map(|k| r.imax - k * step)
            .take_while(|&i| i >= r.i0)
            .take(r.span().div_ceil(step))
            .collect();
        v.reverse();
        v
    }

    /// Default sub-span for [`half_plus_outlier`].
    pub const OUTLIER_SPAN: usize = 256;

    /// The lower half of an `n`-bucket span starting at `i0` plus a single
    /// bucket at the three-quarter point.
    pub fn half_plus_outlier(r: &ApproxRange, n: usize) -> Vec<usize> {
        let n = n.min(r.span());
        let mut v: Vec<usize> = (r.i0..=r.i0 + n / 2).collect();
        v.push(r.i0 + 3 * n / 4);
        v
    }
}
