//! Drain microbenchmarks, approximate-queue error sweeps, SVG plots and
//! the queue selection guide.

mod guide;
mod pin;
mod plot;
mod sweep;

pub use guide::{select_queue_guide, OccupancyLevel, RangeKind, Recommendation, LEVELS_THRESHOLD};
pub use pin::pin_current_thread;
pub use plot::emit_plot;
pub use sweep::{preset_errors, run_error_sweep, PresetRow, SweepConfig, SweepRow};

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline_pq::{BhQueue, HeapQueue, TimingWheel};
use crate::bitmap_pq::HffsQueue;
use crate::circular_pq::{CffsQueue, CircularApproxQueue};
use crate::error::QueueError;
use crate::gradient_pq::ApproxStats;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_config(&self) -> bool {
        matches!(self, BenchError::Config(_) | BenchError::Queue(QueueError::InvalidConfig(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchQueue {
    Cffs,
    Approx,
    Hffs,
    Bh,
    Heap,
    Tw,
}

impl BenchQueue {
    pub const ALL: [BenchQueue; 6] = [
        BenchQueue::Cffs,
        BenchQueue::Approx,
        BenchQueue::Hffs,
        BenchQueue::Bh,
        BenchQueue::Heap,
        BenchQueue::Tw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchQueue::Cffs => "cffs",
            BenchQueue::Approx => "approx",
            BenchQueue::Hffs => "hffs",
            BenchQueue::Bh => "bh",
            BenchQueue::Heap => "heap",
            BenchQueue::Tw => "tw",
        }
    }
}

impl fmt::Display for BenchQueue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchQueue {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown queue kind {s:?}")))
    }
}

/// How the queue is filled before draining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fill {
    /// Every bucket gets `floor(p)` items plus one more with probability
    /// `p - floor(p)`.
    PacketsPerBucket(f64),
    /// That fraction of buckets, chosen at random, holds one item each.
    Occupancy(f64),
}

impl Fill {
    pub fn mode(&self) -> &'static str {
        match self {
            Fill::PacketsPerBucket(_) => "pkts_per_bucket",
            Fill::Occupancy(_) => "occupancy",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Fill::PacketsPerBucket(v) | Fill::Occupancy(v) => v,
        }
    }
}

fn d_reps() -> usize {
    10
}
fn d_warmup() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub queue: BenchQueue,
    pub num_buckets: usize,
    pub fill: Fill,
    #[serde(default = "d_reps")]
    pub reps: usize,
    #[serde(default = "d_warmup")]
    pub warmup: usize,
    #[serde(default)]
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(queue: BenchQueue, num_buckets: usize, fill: Fill) -> Self {
        Self {
            queue,
            num_buckets,
            fill,
            reps: d_reps(),
            warmup: d_warmup(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let err = |m: String| Err(BenchError::Config(m));
        if self.num_buckets == 0 {
            return err("num_buckets must be positive".into());
        }
        if self.reps == 0 {
            return err("reps must be at least 1".into());
        }
        if self.warmup < 3 {
            return err(format!("warmup {} is below the minimum of 3", self.warmup));
        }
        match self.fill {
            Fill::PacketsPerBucket(p) if !(p >= 0.0 && p.is_finite()) => {
                err(format!("packets per bucket {p} must be a nonnegative number"))
            }
            Fill::Occupancy(o) if !(0.0..=1.0).contains(&o) => {
                err(format!("occupancy {o} must lie in [0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// One CSV row. Error columns are zero for exact queues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub queue: String,
    pub buckets: usize,
    pub fill_mode: String,
    pub fill_value: f64,
    pub seed: u64,
    pub mops: f64,
    pub min_mops: f64,
    pub max_mops: f64,
    pub mean_abs_err: f64,
    pub p99_abs_err: f64,
    pub mean_search_len: f64,
    /// Hash of the drained rank sequence.
    pub checksum: u64,
}

/// Ranks to insert, in insertion order.
pub fn fill_ranks(num_buckets: usize, fill: Fill, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks = Vec::new();
    match fill {
        Fill::PacketsPerBucket(p) => {
            let whole = p.floor() as usize;
            let frac = p - p.floor();
            for b in 0..num_buckets as u64 {
                let extra = usize::from(frac > 0.0 && rng.gen::<f64>() < frac);
                ranks.extend(std::iter::repeat(b).take(whole + extra));
            }
        }
        Fill::Occupancy(o) => {
            let k = ((o * num_buckets as f64).round() as usize).min(num_buckets);
            ranks.extend(
                rand::seq::index::sample(&mut rng, num_buckets, k)
                    .into_iter()
                    .map(|b| b as u64),
            );
        }
    }
    ranks.shuffle(&mut rng);
    ranks
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn mix(h: u64, rank: u64) -> u64 {
    (h ^ rank).wrapping_mul(FNV_PRIME)
}

/// Result of one drain.
struct Drain {
    secs: f64,
    pops: usize,
    checksum: u64,
}

/// Fills `queue` with `ranks` (untimed), then pops everything (timed).
fn drain_once(queue: BenchQueue, n: usize, ranks: &[u64]) -> Result<Drain, BenchError> {
    let mut h = FNV_OFFSET;
    let mut pops = 0usize;
    let secs;
    macro_rules! timed_pop {
        ($q:expr) => {{
            let start = Instant::now();
            while let Some((r, _)) = $q.pop_min() {
                h = mix(h, r);
                pops += 1;
            }
            secs = start.elapsed().as_secs_f64();
        }};
    }
    match queue {
        BenchQueue::Cffs => {
            let mut q = CffsQueue::new(n)?;
            for (i, &r) in ranks.iter().enumerate() {
                q.insert(r, i as u32)?;
            }
            timed_pop!(q);
        }
        BenchQueue::Approx => {
            let mut q = CircularApproxQueue::new(n)?;
            for (i, &r) in ranks.iter().enumerate() {
                q.insert(r, i as u32)?;
            }
            timed_pop!(q);
        }
        BenchQueue::Hffs => {
            let mut q = HffsQueue::with_buckets(n)?;
            for (i, &r) in ranks.iter().enumerate() {
                q.insert(r, i as u32)?;
            }
            timed_pop!(q);
        }
        BenchQueue::Bh => {
            let mut q = BhQueue::new(n)?;
            for (i, &r) in ranks.iter().enumerate() {
                q.insert(r, i as u32)?;
            }
            timed_pop!(q);
        }
        BenchQueue::Heap => {
            let mut q = HeapQueue::with_capacity(ranks.len());
            for (i, &r) in ranks.iter().enumerate() {
                q.insert(r, i as u32);
            }
            timed_pop!(q);
        }
        BenchQueue::Tw => {
            let mut q = TimingWheel::new(n, 1)?;
            for (i, &r) in ranks.iter().enumerate() {
                q.insert(r, i as u32)?;
            }
            let mut out = Vec::with_capacity(64);
            let start = Instant::now();
            let mut now = 0;
            while !q.is_empty() {
                q.advance_into(now, &mut out);
                for (r, _) in out.drain(..) {
                    h = mix(h, r);
                    pops += 1;
                }
                now += 1;
            }
            secs = start.elapsed().as_secs_f64();
        }
    }
    black_box(h);
    Ok(Drain { secs, pops, checksum: h })
}

/// Untimed drain of the approximate queue with error tracking on.
fn approx_errors(n: usize, ranks: &[u64]) -> Result<ApproxStats, BenchError> {
    let mut q = CircularApproxQueue::new(n)?;
    q.set_tracking(true);
    for (i, &r) in ranks.iter().enumerate() {
        q.insert(r, i as u32)?;
    }
    while q.pop_min().is_some() {}
    Ok(q.stats())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Runs `warmup` untimed and `reps` timed drains, each on its own thread
/// pinned to a single CPU where the platform allows, and reports the median.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchRow, BenchError> {
    cfg.validate()?;
    let ranks = fill_ranks(cfg.num_buckets, cfg.fill, cfg.seed);
    let mut mops = Vec::with_capacity(cfg.reps);
    let mut checksum = None;
    for rep in 0..cfg.warmup + cfg.reps {
        let d = std::thread::scope(|s| {
            s.spawn(|| {
                pin_current_thread();
                drain_once(cfg.queue, cfg.num_buckets, &ranks)
            })
            .join()
            .expect("benchmark thread panicked")
        })?;
        if d.pops != ranks.len() {
            return Err(BenchError::Config(format!(
                "{} drained {} of {} items",
                cfg.queue,
                d.pops,
                ranks.len()
            )));
        }
        match checksum {
            None => checksum = Some(d.checksum),
            Some(c) => assert_eq!(c, d.checksum, "drain order changed between repetitions"),
        }
        if rep >= cfg.warmup {
            mops.push(d.pops as f64 / d.secs.max(1e-12) / 1e6);
        }
    }
    let (mean_abs_err, p99_abs_err, mean_search_len) = if cfg.queue == BenchQueue::Approx {
        let st = approx_errors(cfg.num_buckets, &ranks)?;
        (st.mean_abs_error(), st.p99_abs_error(), st.mean_search_len())
    } else {
        (0.0, 0.0, 0.0)
    };
    let min_mops = mops.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mops = mops.iter().copied().fold(0.0, f64::max);
    Ok(BenchRow {
        queue: cfg.queue.name().into(),
        buckets: cfg.num_buckets,
        fill_mode: cfg.fill.mode().into(),
        fill_value: cfg.fill.value(),
        seed: cfg.seed,
        mops: median(&mut mops),
        min_mops,
        max_mops,
        mean_abs_err,
        p99_abs_err,
        mean_search_len,
        checksum: checksum.unwrap_or(FNV_OFFSET),
    })
}

/// Writes rows with a header line.
pub fn write_csv<W: std::io::Write, R: Serialize>(w: W, rows: &[R]) -> Result<(), BenchError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_shapes() {
        assert_eq!(fill_ranks(100, Fill::PacketsPerBucket(1.0), 1).len(), 100);
        assert_eq!(fill_ranks(100, Fill::PacketsPerBucket(2.0), 1).len(), 200);
        let occ = fill_ranks(1000, Fill::Occupancy(0.3), 1);
        assert_eq!(occ.len(), 300);
        let mut d = occ.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 300);
        let half = fill_ranks(10_000, Fill::PacketsPerBucket(0.5), 2).len();
        assert!((4700..5300).contains(&half));
    }

    #[test]
    fn exact_queues_agree() {
        let mut sums = Vec::new();
        for q in BenchQueue::ALL {
            if q == BenchQueue::Approx {
                continue;
            }
            let mut c = BenchConfig::new(q, 512, Fill::PacketsPerBucket(1.5));
            c.reps = 1;
            sums.push(run_bench(&c).unwrap().checksum);
        }
        assert!(sums.windows(2).all(|w| w[0] == w[1]), "{sums:?}");
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = BenchConfig::new(BenchQueue::Cffs, 10, Fill::Occupancy(1.5));
        assert!(run_bench(&c).unwrap_err().is_config());
        c.fill = Fill::Occupancy(0.5);
        c.warmup = 1;
        assert!(run_bench(&c).is_err());
        assert!("nope".parse::<BenchQueue>().is_err());
    }
}
