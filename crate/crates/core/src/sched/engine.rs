use std::collections::{HashMap, VecDeque};

use crate::arena::Handle;
use crate::policies::hclock::{self, HclockSelector};
use crate::policies::pacing::{effective_rate, Gate};
use crate::policies::{lqf, pfabric, share, PolicyKind};

use super::{
    quantize, FlowId, NextStage, NodeQueue, Packet, PacketMeta, PolicyConfig, RankState,
    RateParams, SchedError, Shaper, ShaperEntry, StageId,
};

#[derive(Debug)]
enum Selector {
    Queue {
        q: NodeQueue,
        slots: Vec<Option<Handle>>,
        granularity: f64,
    },
    Hclock(HclockSelector),
}

#[derive(Debug)]
struct NodeData {
    policy: PolicyKind,
    children: Vec<u32>,
    sel: Selector,
    /// Share tag of the most recently served child.
    vtime: f64,
}

#[derive(Debug)]
enum Body {
    Flow { id: FlowId, fifo: VecDeque<Packet> },
    Node(NodeData),
}

#[derive(Debug)]
struct Entity {
    name: String,
    parent: Option<u32>,
    /// Index among the parent's children.
    local: u32,
    state: RankState,
    params: RateParams,
    gate: Option<Gate>,
    body: Body,
}

/// Counters kept by the engine.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub enqueued: u64,
    pub dequeued: u64,
    pub shaper_inserts: u64,
    pub shaper_releases: u64,
    /// Releases more than one shaper bucket ahead of their timestamp.
    pub early_releases: u64,
    /// Rank changes of an already queued child.
    pub repositions: u64,
    /// Buckets touched by those rank changes.
    pub reposition_bucket_touches: u64,
}

/// One shaper release, recorded when logging is on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReleaseRecord {
    pub time: u64,
    pub ts: u64,
    /// Node id, or `flow:<id>` for a flow gate.
    pub stage: String,
    pub packet: u64,
    pub flow: FlowId,
    pub size: u32,
}

/// Snapshot of one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowView {
    pub id: FlowId,
    /// Packets held in the flow's FIFO.
    pub fifo_len: usize,
    pub state: RankState,
}

/// Scheduling tree plus its shaper.
#[derive(Debug)]
pub struct Engine {
    ents: Vec<Entity>,
    root: u32,
    flows: HashMap<FlowId, u32>,
    shaper: Shaper,
    /// Packets cleared by the root and waiting for the wire.
    wire_tokens: u64,
    stats: EngineStats,
    release_log: Option<Vec<ReleaseRecord>>,
}

impl Engine {
    pub fn from_config(cfg: &PolicyConfig) -> Result<Self, SchedError> {
        cfg.validate()?;
        let mut ents: Vec<Entity> = Vec::new();
        let mut by_name: HashMap<&str, u32> = HashMap::new();
        for n in &cfg.nodes {
            by_name.insert(n.id.as_str(), ents.len() as u32);
            ents.push(Entity {
                name: n.id.clone(),
                parent: None,
                local: 0,
                state: RankState::default(),
                params: RateParams {
                    reservation: n.reservation,
                    limit: n.limit,
                    share: n.share,
                },
                gate: None,
                body: Body::Node(NodeData {
                    policy: n.policy,
                    children: Vec::new(),
                    // Replaced once the child count is known.
                    sel: Selector::Queue {
                        q: NodeQueue::new(super::QueueKind::Bh, 1)?,
                        slots: Vec::new(),
                        granularity: 1.0,
                    },
                    vtime: 0.0,
                }),
            });
        }
        let attach = |ents: &mut Vec<Entity>, child: u32, parent: u32| {
            let Body::Node(nd) = &mut ents[parent as usize].body else {
                unreachable!("parents are nodes")
            };
            let local = nd.children.len() as u32;
            nd.children.push(child);
            let e = &mut ents[child as usize];
            e.parent = Some(parent);
            e.local = local;
        };
        for n in &cfg.nodes {
            if let Some(p) = &n.parent {
                let c = by_name[n.id.as_str()];
                attach(&mut ents, c, by_name[p.as_str()]);
            }
        }
        let mut flows = HashMap::new();
        for f in &cfg.flows {
            let idx = ents.len() as u32;
            ents.push(Entity {
                name: format!("flow:{}", f.id),
                parent: None,
                local: 0,
                state: RankState::default(),
                params: RateParams {
                    reservation: f.reservation,
                    limit: f.limit,
                    share: f.share,
                },
                gate: None,
                body: Body::Flow {
                    id: f.id,
                    fifo: VecDeque::new(),
                },
            });
            attach(&mut ents, idx, by_name[f.leaf.as_str()]);
            flows.insert(f.id, idx);
        }
        for n in &cfg.nodes {
            let idx = by_name[n.id.as_str()] as usize;
            let Body::Node(nd) = &mut ents[idx].body else {
                unreachable!()
            };
            let k = nd.children.len();
            nd.sel = match n.policy {
                PolicyKind::Hclock => Selector::Hclock(HclockSelector::new(
                    k.max(1),
                    n.effective_buckets(),
                    n.effective_granularity(),
                    PolicyKind::Share.default_granularity(),
                )?),
                _ => Selector::Queue {
                    q: NodeQueue::new(n.effective_queue(), n.effective_buckets())?,
                    slots: vec![None; k],
                    granularity: n.effective_granularity(),
                },
            };
        }
        // Rate limits become shaper gates except under an hClock parent,
        // where the limit is one of the three hClock ranks.
        for i in 0..ents.len() {
            let under_hclock = ents[i].parent.is_some_and(|p| {
                matches!(&ents[p as usize].body, Body::Node(nd) if nd.policy == PolicyKind::Hclock)
            });
            let limit = if under_hclock {
                0.0
            } else {
                ents[i].params.limit
            };
            let pacing = match &ents[i].body {
                Body::Flow { id, .. } => cfg
                    .flows
                    .iter()
                    .find(|f| f.id == *id)
                    .map_or(0.0, |f| f.pacing_rate),
                Body::Node(_) => 0.0,
            };
            ents[i].gate = effective_rate(limit, pacing).map(Gate::new);
        }
        let root = by_name[cfg.root().expect("validated").id.as_str()];
        Ok(Self {
            ents,
            root,
            flows,
            shaper: Shaper::new(cfg.shaper.granularity_ns, cfg.shaper.num_buckets)?,
            wire_tokens: 0,
            stats: EngineStats::default(),
            release_log: None,
        })
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn shaper(&self) -> &Shaper {
        &self.shaper
    }

    /// Records every shaper release from now on.
    pub fn enable_release_log(&mut self) {
        self.release_log.get_or_insert_with(Vec::new);
    }

    pub fn take_release_log(&mut self) -> Vec<ReleaseRecord> {
        self.release_log
            .as_mut()
            .map(std::mem::take)
            .unwrap_or_default()
    }

    pub fn flow_ids(&self) -> Vec<FlowId> {
        let mut v: Vec<_> = self.flows.keys().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn flow(&self, id: FlowId) -> Option<FlowView> {
        let e = &self.ents[*self.flows.get(&id)? as usize];
        let Body::Flow { fifo, .. } = &e.body else {
            unreachable!()
        };
        Some(FlowView {
            id,
            fifo_len: fifo.len(),
            state: e.state,
        })
    }

    /// Packets held in flow FIFOs.
    pub fn backlog(&self) -> usize {
        self.flows
            .values()
            .map(|&e| match &self.ents[e as usize].body {
                Body::Flow { fifo, .. } => fifo.len(),
                Body::Node(_) => 0,
            })
            .sum()
    }

    /// Rank of the packet at the head of a flow's FIFO.
    pub fn head_rank(&self, id: FlowId) -> Option<u64> {
        match &self.ents[*self.flows.get(&id)? as usize].body {
            Body::Flow { fifo, .. } => fifo.front().map(|p| p.rank),
            Body::Node(_) => None,
        }
    }

    pub fn flow_backlog(&self, id: FlowId) -> Option<usize> {
        self.flow(id).map(|f| f.fifo_len)
    }

    /// True when the root has cleared a packet for the wire.
    pub fn has_ready(&self) -> bool {
        self.wire_tokens > 0
    }

    /// Changes a flow's pacing rate (bytes per second, zero to unshape).
    /// Takes effect from the next packet.
    pub fn set_flow_rate(&mut self, id: FlowId, rate: f64) -> Result<(), SchedError> {
        let e = *self.flows.get(&id).ok_or(SchedError::UnknownFlow(id))?;
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(SchedError::Config(format!(
                "rate {rate} must be nonnegative"
            )));
        }
        let ent = &mut self.ents[e as usize];
        match (&mut ent.gate, rate > 0.0) {
            (Some(g), true) => g.rate = rate,
            (g @ None, true) => *g = Some(Gate::new(rate)),
            (g, false) => *g = None,
        }
        Ok(())
    }

    fn node(&self, i: u32) -> &NodeData {
        match &self.ents[i as usize].body {
            Body::Node(nd) => nd,
            Body::Flow { .. } => unreachable!("entity {i} is a flow"),
        }
    }

    fn node_mut(&mut self, i: u32) -> &mut NodeData {
        match &mut self.ents[i as usize].body {
            Body::Node(nd) => nd,
            Body::Flow { .. } => unreachable!("entity {i} is a flow"),
        }
    }

    fn is_flow(&self, i: u32) -> bool {
        matches!(self.ents[i as usize].body, Body::Flow { .. })
    }

    fn queue_key(policy: PolicyKind, st: &RankState, granularity: f64, q: &NodeQueue) -> u64 {
        match policy {
            PolicyKind::Lqf => lqf::key(st, q.max_key().map_or(u64::MAX, |m| m + 1) as usize),
            PolicyKind::Pfabric => quantize(st.rank, granularity),
            PolicyKind::Share | PolicyKind::Hclock => quantize(st.s_rank, granularity),
        }
    }

    /// Files (or refiles) child `c` in parent `p`'s queue from its current ranks.
    fn file_child(&mut self, p: u32, c: u32, now: u64) {
        let (st, params, local) = {
            let e = &self.ents[c as usize];
            (e.state, e.params, e.local)
        };
        let nd = self.node_mut(p);
        let policy = nd.policy;
        let mut moved = false;
        match &mut nd.sel {
            Selector::Queue {
                q,
                slots,
                granularity,
            } => {
                if let Some(h) = slots[local as usize].take() {
                    q.remove(h).expect("tracked handle");
                    moved = true;
                }
                let key = Self::queue_key(policy, &st, *granularity, q);
                slots[local as usize] = Some(q.push(key, local));
            }
            Selector::Hclock(h) => {
                moved = h.is_queued(local);
                h.place(local, &st, &params, now);
            }
        }
        if moved {
            self.stats.repositions += 1;
            self.stats.reposition_bucket_touches += 2;
        }
    }

    fn unfile_child(&mut self, p: u32, c: u32) {
        let local = self.ents[c as usize].local;
        match &mut self.node_mut(p).sel {
            Selector::Queue { q, slots, .. } => {
                if let Some(h) = slots[local as usize].take() {
                    q.remove(h).expect("tracked handle");
                }
            }
            Selector::Hclock(h) => h.remove(local),
        }
    }

    /// Key child `c` would be filed under, for the single-queue selectors.
    fn current_key(&self, p: u32, c: u32) -> Option<u64> {
        let nd = self.node(p);
        match &nd.sel {
            Selector::Queue { q, granularity, .. } => Some(Self::queue_key(
                nd.policy,
                &self.ents[c as usize].state,
                *granularity,
                q,
            )),
            Selector::Hclock(_) => None,
        }
    }

    /// Adds a packet to its flow and pushes its token up the tree.
    pub fn enqueue(&mut self, mut pkt: Packet, now: u64) -> Result<(), SchedError> {
        let e = *self
            .flows
            .get(&pkt.flow)
            .ok_or(SchedError::UnknownFlow(pkt.flow))?;
        if pkt.size == 0 {
            return Err(SchedError::Config(format!("packet {} has size 0", pkt.id)));
        }
        // The first gate on the way up is where the packet enters the shaper.
        let mut cur = Some(e);
        while let Some(c) = cur {
            if let Some(g) = &self.ents[c as usize].gate {
                let ts = g.peek_ts(pkt.size, now)?;
                self.shaper.check_horizon(ts, now)?;
                break;
            }
            cur = self.ents[c as usize].parent;
        }
        pkt.enqueue_ts = now;
        let meta = pkt.meta();
        match &mut self.ents[e as usize].body {
            Body::Flow { fifo, .. } => fifo.push_back(pkt),
            Body::Node(_) => unreachable!(),
        }
        self.stats.enqueued += 1;
        self.arrive(e, meta, now);
        Ok(())
    }

    /// A unit of work reaches entity `e`: through its gate if it has one,
    /// otherwise straight into its parent's queue.
    fn arrive(&mut self, e: u32, meta: PacketMeta, now: u64) {
        if let Some(g) = &mut self.ents[e as usize].gate {
            let ts = g.next_ts(meta.size, now).expect("gate rates are validated");
            self.shaper.push(ShaperEntry {
                meta,
                ts,
                next_stage: NextStage::Grant(StageId(e)),
            });
            self.stats.shaper_inserts += 1;
            return;
        }
        self.grant(e, meta, now);
    }

    /// Entity `e` gains one eligible packet in its parent's queue.
    fn grant(&mut self, e: u32, meta: PacketMeta, now: u64) {
        let Some(p) = self.ents[e as usize].parent else {
            self.wire_tokens += 1;
            return;
        };
        let old_key = self.current_key(p, e);
        let activated = self.ents[e as usize].state.len == 0;
        let mut st = self.ents[e as usize].state;
        let params = self.ents[e as usize].params;
        st.len += 1;
        let nd = self.node(p);
        match nd.policy {
            PolicyKind::Lqf => lqf::on_enqueue(&mut st),
            PolicyKind::Pfabric => pfabric::on_enqueue(&mut st, meta.rank),
            PolicyKind::Share => {
                if activated {
                    share::on_activate(&mut st, nd.vtime);
                }
            }
            PolicyKind::Hclock => {
                let Selector::Hclock(h) = &nd.sel else {
                    unreachable!()
                };
                let vmin = h.min_active_s().unwrap_or(nd.vtime);
                hclock::on_enqueue(&mut st, &params, meta.size, now, activated, vmin);
            }
        }
        let is_hclock = nd.policy == PolicyKind::Hclock;
        self.ents[e as usize].state = st;
        if activated || is_hclock || self.current_key(p, e) != old_key {
            self.file_child(p, e, now);
        }
        self.arrive(p, meta, now);
    }

    /// Serves one packet: walks from the root to a flow, taking each node's
    /// front child, then runs the dequeue hooks bottom-up.
    pub fn dequeue(&mut self, now: u64) -> Option<Packet> {
        if self.wire_tokens == 0 {
            return None;
        }
        let mut path = Vec::with_capacity(4);
        let mut cur = self.root;
        loop {
            let nd = self.node_mut(cur);
            let local = match &mut nd.sel {
                Selector::Queue { q, .. } => q.front()?,
                Selector::Hclock(h) => h.pick(now)?.0,
            };
            let child = nd.children[local as usize];
            path.push((cur, child));
            if self.is_flow(child) {
                break;
            }
            cur = child;
        }
        Some(self.commit(&path, now))
    }

    fn commit(&mut self, path: &[(u32, u32)], now: u64) -> Packet {
        let &(_, flow) = path.last().expect("nonempty path");
        let (mut pkt, front_rank) = match &mut self.ents[flow as usize].body {
            Body::Flow { fifo, .. } => {
                let p = fifo.pop_front().expect("a token implies a queued packet");
                (p, fifo.front().map(|f| f.rank))
            }
            Body::Node(_) => unreachable!(),
        };
        pkt.release_ts = now;
        for &(p, c) in path.iter().rev() {
            let mut st = self.ents[c as usize].state;
            let params = self.ents[c as usize].params;
            st.len -= 1;
            let nd = self.node_mut(p);
            match nd.policy {
                PolicyKind::Lqf => lqf::on_dequeue(&mut st),
                PolicyKind::Pfabric => pfabric::on_dequeue(&mut st, pkt.rank, front_rank),
                PolicyKind::Share => {
                    nd.vtime = nd.vtime.max(st.s_rank);
                    share::on_dequeue(&mut st, pkt.size, params.share);
                }
                PolicyKind::Hclock => {}
            }
            self.ents[c as usize].state = st;
            if st.len > 0 {
                self.file_child(p, c, now);
            } else {
                self.unfile_child(p, c);
            }
        }
        self.wire_tokens -= 1;
        self.stats.dequeued += 1;
        pkt
    }

    /// Serves one packet, then keeps serving the same flow while the batch
    /// stays within `max_bytes` and the flow remains eligible. Always returns
    /// at least one packet when anything is eligible.
    pub fn dequeue_batch(&mut self, now: u64, max_bytes: u64) -> Vec<Packet> {
        let Some(first) = self.dequeue(now) else {
            return Vec::new();
        };
        let f = self.flows[&first.flow];
        let mut total = first.size as u64;
        let mut out = vec![first];
        loop {
            let next_size = match &self.ents[f as usize].body {
                Body::Flow { fifo, .. } => match fifo.front() {
                    Some(p) => p.size as u64,
                    None => break,
                },
                Body::Node(_) => unreachable!(),
            };
            if total + next_size > max_bytes {
                break;
            }
            let Some(path) = self.eligible_path(f) else {
                break;
            };
            let pkt = self.commit(&path, now);
            total += pkt.size as u64;
            out.push(pkt);
        }
        out
    }

    /// Root-first path to flow `f` if every level can serve it right now.
    fn eligible_path(&self, f: u32) -> Option<Vec<(u32, u32)>> {
        if self.wire_tokens == 0 {
            return None;
        }
        let mut path = Vec::with_capacity(4);
        let mut c = f;
        while let Some(p) = self.ents[c as usize].parent {
            let e = &self.ents[c as usize];
            if e.state.len == 0 {
                return None;
            }
            if let Selector::Hclock(h) = &self.node(p).sel {
                if h.is_throttled(e.local) {
                    return None;
                }
            }
            path.push((p, c));
            c = p;
        }
        path.reverse();
        Some(path)
    }

    /// Releases every shaper entry due at `now`, moving each to its next
    /// stage. Entries made due by those moves are released in the same call.
    pub fn release(&mut self, now: u64) -> usize {
        let gran = self.shaper.granularity();
        let mut n = 0;
        while let Some(entry) = self.shaper.pop_due(now) {
            n += 1;
            self.stats.shaper_releases += 1;
            if now + gran < entry.ts {
                self.stats.early_releases += 1;
            }
            let NextStage::Grant(StageId(e)) = entry.next_stage;
            if let Some(log) = &mut self.release_log {
                log.push(ReleaseRecord {
                    time: now,
                    ts: entry.ts,
                    stage: self.ents[e as usize].name.clone(),
                    packet: entry.meta.id,
                    flow: entry.meta.flow,
                    size: entry.meta.size,
                });
            }
            self.grant(e, entry.meta, now);
        }
        n
    }

    /// Earliest shaper timestamp bucket.
    pub fn next_event_time(&self) -> Option<u64> {
        self.shaper.next_time()
    }

    /// Earliest time anything changes without new arrivals: the next shaper
    /// release or the next hClock child coming off its limit.
    pub fn next_wakeup(&self) -> Option<u64> {
        let mut t = self.shaper.next_time();
        for e in &self.ents {
            if let Body::Node(NodeData {
                sel: Selector::Hclock(h),
                ..
            }) = &e.body
            {
                if let Some(w) = h.next_wakeup() {
                    t = Some(t.map_or(w, |x| x.min(w)));
                }
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::{FlowConfig, NodeConfig, QueueKind};

    fn pkt(id: u64, flow: FlowId, rank: u64) -> Packet {
        Packet::new(id, flow, 1500, rank)
    }

    #[test]
    fn lqf_repositions_on_enqueue() {
        let mut e = Engine::from_config(&PolicyConfig::single_level(PolicyKind::Lqf, 2)).unwrap();
        e.enqueue(pkt(0, 0, 0), 0).unwrap();
        e.enqueue(pkt(1, 0, 0), 0).unwrap();
        assert_eq!(e.flow(0).unwrap().state.rank, 2.0);
        let before = e.stats().repositions;
        e.enqueue(pkt(2, 0, 0), 0).unwrap();
        assert_eq!(e.flow(0).unwrap().state.rank, 3.0);
        assert_eq!(e.stats().repositions, before + 1);
    }

    #[test]
    fn lqf_serves_longest() {
        let mut e = Engine::from_config(&PolicyConfig::single_level(PolicyKind::Lqf, 2)).unwrap();
        let mut id = 0;
        for (f, n) in [(0, 3), (1, 5)] {
            for _ in 0..n {
                e.enqueue(pkt(id, f, 0), 0).unwrap();
                id += 1;
            }
        }
        let order: Vec<FlowId> = (0..8).map(|_| e.dequeue(0).unwrap().flow).collect();
        // B drains to A's length, then ties go to the earlier insertion.
        assert_eq!(order, vec![1, 1, 0, 1, 0, 1, 0, 1]);
        assert_eq!(e.dequeue(0), None);
    }

    #[test]
    fn empty_tree_returns_none() {
        let mut e = Engine::from_config(&PolicyConfig::single_level(PolicyKind::Share, 1)).unwrap();
        assert_eq!(e.dequeue(0), None);
    }

    #[test]
    fn unknown_flow() {
        let mut e = Engine::from_config(&PolicyConfig::single_level(PolicyKind::Share, 1)).unwrap();
        assert!(matches!(
            e.enqueue(pkt(0, 9, 0), 0),
            Err(SchedError::UnknownFlow(9))
        ));
    }

    #[test]
    fn pfabric_rank_hooks() {
        let mut e =
            Engine::from_config(&PolicyConfig::single_level(PolicyKind::Pfabric, 1)).unwrap();
        let mut trace = Vec::new();
        for (i, r) in [5, 4, 3].into_iter().enumerate() {
            e.enqueue(pkt(i as u64, 0, r), 0).unwrap();
            trace.push(e.flow(0).unwrap().state.rank);
        }
        assert_eq!(trace, vec![5.0, 4.0, 3.0]);
        assert_eq!(e.dequeue(0).unwrap().rank, 5);
        assert_eq!(e.flow(0).unwrap().state.rank, 4.0);
        e.dequeue(0);
        e.dequeue(0);
        assert_eq!(e.flow(0).unwrap().state.rank, f64::INFINITY);
    }

    #[test]
    fn shaped_leaf_enters_shaper_first() {
        let cfg = PolicyConfig {
            nodes: vec![
                NodeConfig::new("root"),
                NodeConfig::new("leaf").child_of("root").limit(7e6 / 8.0),
            ],
            flows: vec![FlowConfig::new(0, "leaf")],
            ..Default::default()
        };
        let mut e = Engine::from_config(&cfg).unwrap();
        e.enable_release_log();
        e.enqueue(pkt(0, 0, 0), 0).unwrap();
        assert_eq!(e.shaper().len(), 1);
        assert_eq!(e.dequeue(0), None);
        let t = e.next_event_time().unwrap();
        assert!(t <= 1_714_286 && t + 100_000 > 1_714_286);
        assert_eq!(e.release(t), 1);
        assert_eq!(e.take_release_log()[0].stage, "leaf");
        assert_eq!(e.dequeue(t).unwrap().id, 0);
    }

    #[test]
    fn batch_limits() {
        let mut e = Engine::from_config(&PolicyConfig::single_level(PolicyKind::Share, 1)).unwrap();
        for i in 0..20 {
            e.enqueue(pkt(i, 0, 0), 0).unwrap();
        }
        assert_eq!(e.dequeue_batch(0, 10 * 1024).len(), 6);
        assert_eq!(e.dequeue_batch(0, 0).len(), 1);
    }

    #[test]
    fn per_node_queue_kinds() {
        for kind in [
            QueueKind::Cffs,
            QueueKind::Approx,
            QueueKind::Hffs,
            QueueKind::Bh,
        ] {
            let cfg = PolicyConfig {
                nodes: vec![NodeConfig::new("root").queue(kind, 4096)],
                flows: (0..3).map(|i| FlowConfig::new(i, "root")).collect(),
                ..Default::default()
            };
            let mut e = Engine::from_config(&cfg).unwrap();
            for i in 0..30 {
                e.enqueue(pkt(i, (i % 3) as u32, 0), 0).unwrap();
            }
            let mut n = 0;
            while e.dequeue(0).is_some() {
                n += 1;
            }
            assert_eq!(n, 30, "{kind:?}");
        }
    }
}
