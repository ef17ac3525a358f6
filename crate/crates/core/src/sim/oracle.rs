//! Brute-force reference schedulers for differential tests.
//!
//! Every flow keeps its rank state in a plain vector and each dequeue scans
//! all of them. A child that is (re)filed in its parent's queue gets a fresh
//! stamp, and equal keys are served in stamp order, which is the FIFO order
//! of the bucket queues.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::policies::PolicyKind;
use crate::sched::{quantize, Engine, FlowId, Packet, PolicyConfig, SchedError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOp {
    Enqueue { flow: FlowId, rank: u64, size: u32 },
    Dequeue,
}

#[derive(Default)]
struct RefFlow {
    fifo: VecDeque<(u64, u64, u32)>,
    share: f64,
    rank: f64,
    s_tag: f64,
    key: Option<u64>,
    stamp: u64,
}

/// Service order, as packet ids numbered by enqueue position, that the
/// literal policy rules produce for `ops` on a single-level, unshaped `cfg`.
pub fn oracle_order(cfg: &PolicyConfig, ops: &[TraceOp]) -> Result<Vec<u64>, SchedError> {
    cfg.validate()?;
    let root = cfg.root().expect("validated");
    if cfg.nodes.len() != 1 {
        return Err(SchedError::Config("oracle supports a single node".into()));
    }
    if root.limit > 0.0
        || cfg
            .flows
            .iter()
            .any(|f| f.limit > 0.0 || f.pacing_rate > 0.0)
    {
        return Err(SchedError::Config("oracle does not model shaping".into()));
    }
    let policy = root.policy;
    if policy == PolicyKind::Hclock {
        return Err(SchedError::Config("no oracle for hClock".into()));
    }
    let gran = root.effective_granularity();
    let cap = root.effective_buckets() as u64 - 1;
    let mut flows: Vec<RefFlow> = cfg
        .flows
        .iter()
        .map(|f| RefFlow {
            share: f.share,
            rank: f64::INFINITY,
            ..Default::default()
        })
        .collect();
    let pos = |id: FlowId| cfg.flows.iter().position(|f| f.id == id);
    let key = |f: &RefFlow| match policy {
        PolicyKind::Lqf => cap - (f.fifo.len() as u64).min(cap),
        PolicyKind::Pfabric => quantize(f.rank, gran),
        _ => quantize(f.s_tag, gran),
    };
    let mut vtime = 0.0f64;
    let mut stamp = 0u64;
    let mut next_id = 0u64;
    let mut out = Vec::new();
    for op in ops {
        match *op {
            TraceOp::Enqueue { flow, rank, size } => {
                let i = pos(flow).ok_or(SchedError::UnknownFlow(flow))?;
                let f = &mut flows[i];
                let was_empty = f.fifo.is_empty();
                f.fifo.push_back((next_id, rank, size));
                next_id += 1;
                match policy {
                    PolicyKind::Pfabric => f.rank = f.rank.min(rank as f64),
                    PolicyKind::Share if was_empty => f.s_tag = f.s_tag.max(vtime),
                    _ => {}
                }
                let k = key(f);
                if was_empty || f.key != Some(k) {
                    f.key = Some(k);
                    f.stamp = stamp;
                    stamp += 1;
                }
            }
            TraceOp::Dequeue => {
                let Some(i) = (0..flows.len())
                    .filter(|&i| flows[i].key.is_some())
                    .min_by_key(|&i| (flows[i].key, flows[i].stamp))
                else {
                    continue;
                };
                let f = &mut flows[i];
                let (id, prank, size) = f.fifo.pop_front().expect("filed flows hold packets");
                out.push(id);
                match policy {
                    PolicyKind::Pfabric => {
                        f.rank = match f.fifo.front() {
                            Some(&(_, r, _)) => prank.min(r) as f64,
                            None => f64::INFINITY,
                        }
                    }
                    PolicyKind::Share => {
                        vtime = vtime.max(f.s_tag);
                        f.s_tag += size as f64 / f.share;
                    }
                    _ => {}
                }
                if f.fifo.is_empty() {
                    f.key = None;
                } else {
                    f.key = Some(key(f));
                    f.stamp = stamp;
                    stamp += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Service order the engine produces for `ops`, all at time zero.
pub fn engine_order(cfg: &PolicyConfig, ops: &[TraceOp]) -> Result<Vec<u64>, SchedError> {
    let mut eng = Engine::from_config(cfg)?;
    let mut next_id = 0u64;
    let mut out = Vec::new();
    for op in ops {
        match *op {
            TraceOp::Enqueue { flow, rank, size } => {
                eng.enqueue(Packet::new(next_id, flow, size, rank), 0)?;
                next_id += 1;
            }
            TraceOp::Dequeue => {
                if let Some(p) = eng.dequeue(0) {
                    out.push(p.id);
                }
            }
        }
    }
    Ok(out)
}

/// Random interleaving of arrivals and departures for up to `max_flows`
/// flows and `max_packets` packets. Each packet's rank is its flow's
/// remaining length in packets, so ranks fall within a flow. The trace ends
/// with enough dequeues to drain everything.
pub fn srf_trace(seed: u64, max_flows: u32, max_packets: usize) -> Vec<TraceOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_flows = rng.gen_range(1..=max_flows.max(1));
    let total = rng.gen_range(1..=max_packets.max(1));
    let mut left: Vec<u64> = vec![0; n_flows as usize];
    for _ in 0..total {
        left[rng.gen_range(0..n_flows as usize)] += 1;
    }
    let mut ops = Vec::new();
    let mut queued = 0usize;
    let mut remaining = total;
    while remaining > 0 {
        if queued > 0 && rng.gen_bool(0.4) {
            ops.push(TraceOp::Dequeue);
            queued -= 1;
            continue;
        }
        let live: Vec<usize> = (0..left.len()).filter(|&i| left[i] > 0).collect();
        let i = live[rng.gen_range(0..live.len())];
        ops.push(TraceOp::Enqueue {
            flow: i as FlowId,
            rank: left[i],
            size: 1500,
        });
        left[i] -= 1;
        remaining -= 1;
        queued += 1;
    }
    ops.extend(std::iter::repeat(TraceOp::Dequeue).take(queued));
    ops
}
