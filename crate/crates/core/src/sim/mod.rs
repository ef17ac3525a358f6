//! Discrete-event simulation over a virtual nanosecond clock.

mod metrics;
mod oracle;
mod workload;

pub use metrics::{FlowMetrics, SimMetrics, TraceEvent, TraceRecord};
pub use oracle::{engine_order, oracle_order, srf_trace, TraceOp};
pub use workload::{Arrival, FlowLoad, SizeDist, Workload, MTU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::QueueError;
use crate::policies::PolicyKind;
use crate::sched::{Engine, FlowConfig, FlowId, NodeConfig, Packet, PolicyConfig, SchedError};

/// Rates in the nested-limit example, in bits per second.
pub const NESTED_ROOT_PACE_BPS: f64 = 20e6;
pub const NESTED_PARENT_LIMIT_BPS: f64 = 10e6;
pub const NESTED_LEAF_LIMIT_BPS: f64 = 7e6;

/// Root paced at 20 Mbps with children A and B sharing equally. B is
/// limited to 10 Mbps and has children B1 and B2, where B2 is limited to
/// 7 Mbps. Flow 0 sits under A, flow 1 under B1 and flow 2 under B2.
pub fn nested_limits_config() -> PolicyConfig {
    PolicyConfig {
        nodes: vec![
            NodeConfig::new("root").limit(NESTED_ROOT_PACE_BPS / 8.0),
            NodeConfig::new("A").child_of("root").share(0.5),
            NodeConfig::new("B")
                .child_of("root")
                .share(0.5)
                .limit(NESTED_PARENT_LIMIT_BPS / 8.0),
            NodeConfig::new("B1").child_of("B"),
            NodeConfig::new("B2")
                .child_of("B")
                .limit(NESTED_LEAF_LIMIT_BPS / 8.0),
        ],
        flows: vec![
            FlowConfig::new(0, "A"),
            FlowConfig::new(1, "B1"),
            FlowConfig::new(2, "B2"),
        ],
        ..Default::default()
    }
}

struct FlowGen {
    load: crate::sim::FlowLoad,
    in_system: usize,
    next_arrival: u64,
    remaining: Option<u64>,
    /// The pending arrival has already been counted as deferred.
    held: bool,
}

impl FlowGen {
    fn done(&self) -> bool {
        self.remaining == Some(0)
    }
}

struct Generator {
    rng: ChaCha8Rng,
    flows: Vec<FlowGen>,
    slot: std::collections::HashMap<FlowId, usize>,
    w: Workload,
    next_id: u64,
}

impl Generator {
    fn new(w: &Workload, cfg: &PolicyConfig) -> Result<Self, SchedError> {
        let loads: Vec<FlowLoad> = if w.flows.is_empty() {
            cfg.flows.iter().map(|f| FlowLoad::new(f.id)).collect()
        } else {
            w.flows.clone()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(w.seed);
        let mut flows = Vec::with_capacity(loads.len());
        let mut slot = std::collections::HashMap::new();
        for load in loads {
            if !cfg.flows.iter().any(|f| f.id == load.id) {
                return Err(SchedError::UnknownFlow(load.id));
            }
            if slot.insert(load.id, flows.len()).is_some() {
                return Err(SchedError::Config(format!("flow {} listed twice", load.id)));
            }
            let mut g = FlowGen {
                next_arrival: load.start_ns,
                remaining: load.remaining_bytes,
                in_system: 0,
                held: false,
                load,
            };
            if w.arrival == Arrival::Rate {
                g.next_arrival += exp_gap(&mut rng, MTU, g.load.rate_bps);
            }
            flows.push(g);
        }
        Ok(Self {
            rng,
            flows,
            slot,
            w: w.clone(),
            next_id: 0,
        })
    }

    /// Offers every arrival due at `now` to the engine.
    fn fill(&mut self, now: u64, eng: &mut Engine, m: &mut SimMetrics) -> Result<(), SchedError> {
        for i in 0..self.flows.len() {
            loop {
                let g = &self.flows[i];
                if g.done() || now < g.load.start_ns {
                    break;
                }
                if self.w.arrival == Arrival::Rate && g.next_arrival > now {
                    break;
                }
                if g.in_system >= self.w.flow_cap {
                    if self.w.arrival == Arrival::Rate && !g.held {
                        self.flows[i].held = true;
                        m.deferred += 1;
                    }
                    break;
                }
                let mut size = self.w.size.sample(&mut self.rng);
                let mut rank = 0;
                if let Some(r) = g.remaining {
                    rank = r.div_ceil(1024);
                    size = size.min(r.min(u32::MAX as u64) as u32);
                }
                let (id, flow) = (self.next_id, g.load.id);
                match eng.enqueue(Packet::new(id, flow, size, rank), now) {
                    Ok(()) => {}
                    Err(SchedError::Queue(QueueError::BeyondHorizon { .. })) => {
                        if !self.flows[i].held {
                            self.flows[i].held = true;
                            m.deferred += 1;
                        }
                        break;
                    }
                    Err(e) => return Err(e),
                }
                if self.w.trace {
                    m.trace.push(TraceRecord {
                        time: now,
                        event: TraceEvent::Enqueue,
                        flow,
                        packet: id,
                        rank,
                    });
                }
                self.next_id += 1;
                m.packets_in += 1;
                let rate = self.flows[i].load.rate_bps;
                let gap = exp_gap(&mut self.rng, size, rate);
                let g = &mut self.flows[i];
                g.in_system += 1;
                g.held = false;
                if let Some(r) = &mut g.remaining {
                    *r -= size as u64;
                }
                if self.w.arrival == Arrival::Rate {
                    g.next_arrival += gap.max(1);
                }
            }
        }
        Ok(())
    }

    fn departed(&mut self, flow: FlowId) {
        if let Some(&i) = self.slot.get(&flow) {
            self.flows[i].in_system -= 1;
        }
    }

    /// Earliest future time the generator has something new to offer.
    fn next_time(&self, now: u64) -> Option<u64> {
        self.flows
            .iter()
            .filter(|g| !g.done() && g.in_system < self.w.flow_cap)
            .filter_map(|g| {
                let t = match self.w.arrival {
                    Arrival::Rate => g.next_arrival.max(g.load.start_ns),
                    Arrival::Backlogged => g.load.start_ns,
                };
                (t > now).then_some(t)
            })
            .min()
    }
}

/// Exponential gap with mean `size / rate`, in ns. Zero for unrated flows.
fn exp_gap<R: Rng>(rng: &mut R, size: u32, rate_bps: f64) -> u64 {
    if rate_bps <= 0.0 {
        return 0;
    }
    let u: f64 = rng.gen();
    let mean = size as f64 * 8.0 * 1e9 / rate_bps;
    (-(1.0 - u).ln() * mean).round() as u64
}

/// Runs `w` against a fresh engine built from `cfg`.
///
/// Each step offers due arrivals, releases due shaper entries and, when the
/// wire is free, serves one batch. The clock then jumps to the next arrival,
/// shaper release, hClock wakeup or wire completion.
pub fn run_sim(cfg: &PolicyConfig, w: &Workload) -> Result<SimMetrics, SchedError> {
    w.validate()?;
    let mut eng = Engine::from_config(cfg)?;
    let mut gen = Generator::new(w, cfg)?;
    let mut m = SimMetrics {
        duration_ns: w.duration_ns,
        window_ns: w.rate_window_ns,
        ..Default::default()
    };
    for f in &cfg.flows {
        m.flows.insert(f.id, Default::default());
    }
    if w.trace {
        eng.enable_release_log();
    }
    let ns_per_byte = 8.0 * 1e9 / w.line_rate_bps;
    let mut now = 0u64;
    let mut wire_free = 0u64;
    while now < w.duration_ns {
        gen.fill(now, &mut eng, &mut m)?;
        eng.release(now);
        if now >= wire_free && eng.has_ready() {
            let min_head = if w.track_rank_error {
                eng.flow_ids()
                    .into_iter()
                    .filter_map(|f| eng.head_rank(f))
                    .min()
            } else {
                None
            };
            let batch = eng.dequeue_batch(now, w.batch_bytes);
            let mut sent = 0u64;
            for p in &batch {
                let t = now + (sent as f64 * ns_per_byte).round() as u64;
                sent += p.size as u64;
                let fm = m.flows.entry(p.flow).or_default();
                fm.packets_out += 1;
                fm.bytes_out += p.size as u64;
                fm.departures.push((t, p.size));
                m.packets_out += 1;
                gen.departed(p.flow);
                if w.trace {
                    m.trace.push(TraceRecord {
                        time: t,
                        event: TraceEvent::Dequeue,
                        flow: p.flow,
                        packet: p.id,
                        rank: p.rank,
                    });
                }
            }
            if let (Some(first), Some(lo)) = (batch.first(), min_head) {
                *m.rank_error
                    .entry(first.rank.saturating_sub(lo))
                    .or_default() += 1;
            }
            if sent > 0 {
                wire_free = now + ((sent as f64 * ns_per_byte).round() as u64).max(1);
                gen.fill(now, &mut eng, &mut m)?;
            }
        }
        let mut next = u64::MAX;
        if eng.has_ready() && wire_free > now {
            next = wire_free;
        }
        for t in [eng.next_wakeup(), gen.next_time(now)]
            .into_iter()
            .flatten()
        {
            next = next.min(t);
        }
        if next == u64::MAX {
            break;
        }
        now = next.max(now + 1);
    }
    if w.trace {
        for r in eng.take_release_log() {
            m.trace.push(TraceRecord {
                time: r.time,
                event: TraceEvent::Release,
                flow: r.flow,
                packet: r.packet,
                rank: r.ts,
            });
            m.releases.push(r);
        }
        m.trace.sort_by_key(|r| r.time);
    }
    m.queued_end = eng.backlog() as u64;
    Ok(m)
}

/// Share-based single-level config for quick runs.
pub fn share_config(shares: &[f64]) -> PolicyConfig {
    PolicyConfig {
        nodes: vec![NodeConfig::new("root").policy(PolicyKind::Share)],
        flows: shares
            .iter()
            .enumerate()
            .map(|(i, &s)| FlowConfig::new(i as FlowId, "root").share(s))
            .collect(),
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_duration_is_empty() {
        let m = run_sim(&share_config(&[1.0]), &Workload::backlogged(0)).unwrap();
        assert_eq!(m.packets_out, 0);
        assert!(m.is_conserved());
    }

    #[test]
    fn line_rate_saturates() {
        let m = run_sim(
            &share_config(&[1.0, 1.0]),
            &Workload::backlogged(10_000_000),
        )
        .unwrap();
        let agg = m.aggregate_bps();
        assert!((agg - 1e9).abs() / 1e9 < 0.01, "{agg}");
        assert!(m.is_conserved());
    }
}
