use crate::arena::Handle;
use crate::baseline_pq::BhQueue;
use crate::bitmap_pq::HffsQueue;
use crate::circular_pq::{CffsQueue, CircularApproxQueue};
use crate::error::QueueError;

use super::QueueKind;

/// Priority queue over the children of one tree node. Items are child
/// indices local to the node.
#[derive(Debug)]
pub enum NodeQueue {
    Cffs(CffsQueue<u32>),
    Approx(CircularApproxQueue<u32>),
    Hffs(HffsQueue<u32>),
    Bh(BhQueue<u32>),
}

impl NodeQueue {
    /// For the circular kinds `num_buckets` is the size of one window.
    pub fn new(kind: QueueKind, num_buckets: usize) -> Result<Self, QueueError> {
        Ok(match kind {
            QueueKind::Cffs => Self::Cffs(CffsQueue::new(num_buckets)?),
            QueueKind::Approx => Self::Approx(CircularApproxQueue::new(num_buckets)?),
            QueueKind::Hffs => Self::Hffs(HffsQueue::with_buckets(num_buckets)?),
            QueueKind::Bh => Self::Bh(BhQueue::new(num_buckets)?),
        })
    }

    pub fn kind(&self) -> QueueKind {
        match self {
            Self::Cffs(_) => QueueKind::Cffs,
            Self::Approx(_) => QueueKind::Approx,
            Self::Hffs(_) => QueueKind::Hffs,
            Self::Bh(_) => QueueKind::Bh,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Cffs(q) => q.len(),
            Self::Approx(q) => q.len(),
            Self::Hffs(q) => q.len(),
            Self::Bh(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts at `key`, clamped into the range the queue can hold: below the
    /// window base for the circular kinds, or to the last bucket for the
    /// fixed-range kinds.
    pub fn push(&mut self, key: u64, child: u32) -> Handle {
        match self {
            Self::Cffs(q) => {
                let k = key.max(q.h_index());
                q.insert(k, child).expect("clamped key")
            }
            Self::Approx(q) => {
                let k = key.max(q.h_index());
                q.insert(k, child).expect("clamped key")
            }
            Self::Hffs(q) => {
                let k = key.min(q.num_buckets() as u64 - 1);
                q.insert(k, child).expect("clamped key")
            }
            Self::Bh(q) => {
                let k = key.min(q.num_buckets() as u64 - 1);
                q.insert(k, child).expect("clamped key")
            }
        }
    }

    pub fn remove(&mut self, h: Handle) -> Result<(u64, u32), QueueError> {
        match self {
            Self::Cffs(q) => q.remove(h),
            Self::Approx(q) => q.remove(h),
            Self::Hffs(q) => q.remove(h),
            Self::Bh(q) => q.remove(h),
        }
    }

    /// Child that would be served next.
    pub fn front(&mut self) -> Option<u32> {
        match self {
            Self::Cffs(q) => q.front().map(|(_, _, c)| *c),
            Self::Approx(q) => q.front().map(|(_, _, c)| *c),
            Self::Hffs(q) => q.peek_min().map(|(_, _, c)| *c),
            Self::Bh(q) => q.peek_min().map(|(_, _, c)| *c),
        }
    }

    /// Pops the front child.
    pub fn pop(&mut self) -> Option<(u64, u32)> {
        match self {
            Self::Cffs(q) => q.pop_min(),
            Self::Approx(q) => q.pop_min(),
            Self::Hffs(q) => q.pop_min(),
            Self::Bh(q) => q.pop_min(),
        }
    }

    pub fn min_key(&self) -> Option<u64> {
        match self {
            Self::Cffs(q) => q.min_rank(),
            Self::Approx(q) => q.min_rank(),
            Self::Hffs(q) => q.min_rank(),
            Self::Bh(q) => q.min_rank(),
        }
    }

    /// Largest key accepted without clamping, for the fixed-range kinds.
    pub fn max_key(&self) -> Option<u64> {
        match self {
            Self::Hffs(q) => Some(q.num_buckets() as u64 - 1),
            Self::Bh(q) => Some(q.num_buckets() as u64 - 1),
            _ => None,
        }
    }
}
