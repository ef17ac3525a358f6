use crate::circular_pq::CffsQueue;
use crate::error::QueueError;

use super::{PacketMeta, SchedError, NS_PER_SEC};

/// Identifies the tree entity whose parent queue receives a released packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StageId(pub u32);

/// Where a shaper entry goes when its timestamp passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextStage {
    /// Hand the packet's token to the entity's parent queue, or to the wire
    /// when the entity is the root.
    Grant(StageId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShaperEntry {
    pub meta: PacketMeta,
    pub ts: u64,
    pub next_stage: NextStage,
}

/// `ts = max(now, last_ts) + size / rate`, with `rate` in bytes per second.
/// Updates `last_ts`.
pub fn compute_timestamp(
    last_ts: &mut u64,
    size: u32,
    rate: f64,
    now: u64,
) -> Result<u64, SchedError> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(SchedError::Config(format!("rate {rate} must be positive")));
    }
    let gap = (size as f64 * NS_PER_SEC / rate).round() as u64;
    let ts = now.max(*last_ts) + gap;
    *last_ts = ts;
    Ok(ts)
}

/// One timestamp-keyed queue serving every rate limit.
#[derive(Debug)]
pub struct Shaper {
    queue: CffsQueue<ShaperEntry>,
    granularity: u64,
    horizon: u64,
}

impl Shaper {
    /// Shaper with `num_buckets` slots of `granularity_ns`, split evenly
    /// between the two windows.
    pub fn new(granularity_ns: u64, num_buckets: usize) -> Result<Self, QueueError> {
        if granularity_ns == 0 || num_buckets < 2 {
            return Err(QueueError::InvalidConfig(
                "shaper needs a positive granularity and at least two buckets".into(),
            ));
        }
        Ok(Self {
            queue: CffsQueue::new(num_buckets / 2)?,
            granularity: granularity_ns,
            horizon: granularity_ns * num_buckets as u64,
        })
    }

    pub fn granularity(&self) -> u64 {
        self.granularity
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Fails if `ts` lies more than one horizon past `now`.
    pub fn check_horizon(&self, ts: u64, now: u64) -> Result<(), QueueError> {
        if ts > now + self.horizon {
            return Err(QueueError::BeyondHorizon {
                ts,
                horizon_end: now + self.horizon,
            });
        }
        Ok(())
    }

    pub fn insert(&mut self, entry: ShaperEntry, now: u64) -> Result<(), QueueError> {
        self.check_horizon(entry.ts, now)?;
        self.push(entry);
        Ok(())
    }

    /// Inserts without the horizon check. Timestamps already passed are
    /// filed at the front.
    pub(crate) fn push(&mut self, entry: ShaperEntry) {
        let key = (entry.ts / self.granularity).max(self.queue.h_index());
        self.queue
            .insert(key, entry)
            .expect("key clamped to the window base");
    }

    /// Pops one entry whose bucket starts at or before `now`.
    pub fn pop_due(&mut self, now: u64) -> Option<ShaperEntry> {
        let key = self.queue.min_rank()?;
        if key * self.granularity > now {
            return None;
        }
        self.queue.pop_min().map(|(_, e)| e)
    }

    /// Start of the earliest occupied bucket.
    pub fn next_time(&self) -> Option<u64> {
        self.queue.min_rank().map(|k| k * self.granularity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(id: u64) -> PacketMeta {
        PacketMeta {
            id,
            flow: 0,
            size: 1500,
            rank: 0,
        }
    }

    #[test]
    fn timestamp_arithmetic() {
        let mut last = 0;
        assert_eq!(
            compute_timestamp(&mut last, 1500, 1.5e6, 0).unwrap(),
            1_000_000
        );
        assert_eq!(
            compute_timestamp(&mut last, 1500, 1.5e6, 0).unwrap(),
            2_000_000
        );
        assert_eq!(
            compute_timestamp(&mut last, 1500, 1.5e6, 10_000_000).unwrap(),
            11_000_000
        );
        assert!(compute_timestamp(&mut last, 1500, 0.0, 0).is_err());
    }

    #[test]
    fn releases_in_time_order() {
        let mut s = Shaper::new(100_000, 20_000).unwrap();
        let stage = NextStage::Grant(StageId(0));
        for (id, ts) in [(1, 450_000u64), (2, 120_000), (3, 2_000)] {
            s.insert(
                ShaperEntry {
                    meta: meta(id),
                    ts,
                    next_stage: stage,
                },
                0,
            )
            .unwrap();
        }
        assert_eq!(s.next_time(), Some(0));
        assert_eq!(s.pop_due(0).map(|e| e.meta.id), Some(3));
        assert_eq!(s.pop_due(0), None);
        assert_eq!(s.next_time(), Some(100_000));
        assert_eq!(s.pop_due(100_000).map(|e| e.meta.id), Some(2));
        assert_eq!(s.pop_due(399_999), None);
        assert_eq!(s.pop_due(400_000).map(|e| e.meta.id), Some(1));
        assert!(s.is_empty());
    }

    #[test]
    fn horizon_and_past() {
        let mut s = Shaper::new(100_000, 20_000).unwrap();
        let stage = NextStage::Grant(StageId(0));
        let far = ShaperEntry {
            meta: meta(1),
            ts: 2_000_000_001,
            next_stage: stage,
        };
        assert!(matches!(
            s.insert(far, 0),
            Err(QueueError::BeyondHorizon { .. })
        ));
        s.insert(
            ShaperEntry {
                meta: meta(2),
                ts: 5_000_000,
                next_stage: stage,
            },
            5_000_000,
        )
        .unwrap();
        s.pop_due(5_000_000).unwrap();
        s.insert(
            ShaperEntry {
                meta: meta(3),
                ts: 10,
                next_stage: stage,
            },
            5_000_000,
        )
        .unwrap();
        assert_eq!(s.pop_due(5_000_000).map(|e| e.meta.id), Some(3));
    }
}
