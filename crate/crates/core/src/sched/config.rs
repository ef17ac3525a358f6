use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::policies::PolicyKind;

use super::{FlowId, SchedError};

/// Queue structure used for a node's children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueueKind {
    Cffs,
    Approx,
    Hffs,
    Bh,
}

impl QueueKind {
    pub fn is_fixed_range(self) -> bool {
        matches!(self, Self::Hffs | Self::Bh)
    }
}

/// One node of the scheduling tree.
///
/// `share`, `reservation` and `limit` describe this node as a child of its
/// parent. Under an hClock parent they feed the three hClock ranks;
/// elsewhere a nonzero `limit` is a rate limit enforced by the shaper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default)]
    pub queue_type: Option<QueueKind>,
    #[serde(default)]
    pub num_buckets: Option<usize>,
    /// Rank units per bucket for this node's queue.
    #[serde(default)]
    pub granularity: Option<f64>,
    #[serde(default = "one")]
    pub share: f64,
    #[serde(default)]
    pub reservation: f64,
    #[serde(default)]
    pub limit: f64,
}

/// A flow and the node it hangs from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub id: FlowId,
    pub leaf: String,
    #[serde(default = "one")]
    pub share: f64,
    #[serde(default)]
    pub reservation: f64,
    #[serde(default)]
    pub limit: f64,
    /// Pacing rate in bytes per second; combined with `limit` by taking the minimum.
    #[serde(default)]
    pub pacing_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShaperConfig {
    #[serde(default = "default_shaper_granularity")]
    pub granularity_ns: u64,
    #[serde(default = "default_shaper_buckets")]
    pub num_buckets: usize,
}

impl Default for ShaperConfig {
    fn default() -> Self {
        Self {
            granularity_ns: default_shaper_granularity(),
            num_buckets: default_shaper_buckets(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_shaper_granularity() -> u64 {
    100_000
}

fn default_shaper_buckets() -> usize {
    20_000
}

/// Declarative scheduling tree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default, rename = "node")]
    pub nodes: Vec<NodeConfig>,
    #[serde(default, rename = "flow")]
    pub flows: Vec<FlowConfig>,
    #[serde(default)]
    pub shaper: ShaperConfig,
}

impl NodeConfig {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            parent: None,
            policy: PolicyKind::Share,
            queue_type: None,
            num_buckets: None,
            granularity: None,
            share: 1.0,
            reservation: 0.0,
            limit: 0.0,
        }
    }

    pub fn child_of(mut self, parent: &str) -> Self {
        self.parent = Some(parent.to_string());
        self
    }

    pub fn policy(mut self, p: PolicyKind) -> Self {
        self.policy = p;
        self
    }

    pub fn queue(mut self, kind: QueueKind, num_buckets: usize) -> Self {
        self.queue_type = Some(kind);
        self.num_buckets = Some(num_buckets);
        self
    }

    pub fn granularity(mut self, g: f64) -> Self {
        self.granularity = Some(g);
        self
    }

    pub fn share(mut self, s: f64) -> Self {
        self.share = s;
        self
    }

    pub fn reservation(mut self, r: f64) -> Self {
        self.reservation = r;
        self
    }

    pub fn limit(mut self, l: f64) -> Self {
        self.limit = l;
        self
    }

    pub fn effective_queue(&self) -> QueueKind {
        self.queue_type.unwrap_or(self.policy.default_queue())
    }

    pub fn effective_buckets(&self) -> usize {
        self.num_buckets.unwrap_or(self.policy.default_buckets())
    }

    pub fn effective_granularity(&self) -> f64 {
        self.granularity
            .unwrap_or(self.policy.default_granularity())
    }
}

impl FlowConfig {
    pub fn new(id: FlowId, leaf: &str) -> Self {
        Self {
            id,
            leaf: leaf.to_string(),
            share: 1.0,
            reservation: 0.0,
            limit: 0.0,
            pacing_rate: 0.0,
        }
    }

    pub fn share(mut self, s: f64) -> Self {
        self.share = s;
        self
    }

    pub fn reservation(mut self, r: f64) -> Self {
        self.reservation = r;
        self
    }

    pub fn limit(mut self, l: f64) -> Self {
        self.limit = l;
        self
    }

    pub fn pacing(mut self, r: f64) -> Self {
        self.pacing_rate = r;
        self
    }
}

impl PolicyConfig {
    /// One node of `policy` with flows `0..n` attached.
    pub fn single_level(policy: PolicyKind, n: u32) -> Self {
        Self {
            nodes: vec![NodeConfig::new("root").policy(policy)],
            flows: (0..n).map(|i| FlowConfig::new(i, "root")).collect(),
            shaper: ShaperConfig::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SchedError> {
        let cfg: Self = toml::from_str(s).map_err(|e| SchedError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SchedError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SchedError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn root(&self) -> Option<&NodeConfig> {
        self.nodes.iter().find(|n| n.parent.is_none())
    }

    pub fn node(&self, id: &str) -> Option<&NodeConfig> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn is_within<'a>(&'a self, mut cur: &'a str, node: &str) -> bool {
        loop {
            if cur == node {
                return true;
            }
            match self.node(cur).and_then(|n| n.parent.as_deref()) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Flows attached anywhere below `node`, the node itself included.
    pub fn flows_under(&self, node: &str) -> Vec<FlowId> {
        self.flows
            .iter()
            .filter(|f| self.is_within(&f.leaf, node))
            .map(|f| f.id)
            .collect()
    }

    pub fn validate(&self) -> Result<(), SchedError> {
        let err = |m: String| Err(SchedError::Config(m));
        let mut by_id = HashMap::new();
        for n in &self.nodes {
            if by_id.insert(n.id.as_str(), n).is_some() {
                return err(format!("duplicate node id {:?}", n.id));
            }
        }
        let roots: Vec<_> = self.nodes.iter().filter(|n| n.parent.is_none()).collect();
        if roots.len() != 1 {
            return err(format!(
                "expected exactly one root node, found {}",
                roots.len()
            ));
        }
        for n in &self.nodes {
            if let Some(p) = &n.parent {
                if !by_id.contains_key(p.as_str()) {
                    return err(format!("node {:?} has unknown parent {p:?}", n.id));
                }
            }
            // Walk to the root to rule out cycles.
            let mut seen = HashSet::new();
            let mut cur = n;
            while let Some(p) = &cur.parent {
                if !seen.insert(cur.id.as_str()) {
                    return err(format!("cycle through node {:?}", n.id));
                }
                cur = by_id[p.as_str()];
            }
            if n.effective_buckets() == 0 {
                return err(format!("node {:?} has zero buckets", n.id));
            }
            let g = n.effective_granularity();
            if !(g > 0.0 && g.is_finite()) {
                return err(format!("node {:?} granularity must be positive", n.id));
            }
            check_params(&n.id, n.share, n.reservation, n.limit)?;
            if matches!(n.policy, PolicyKind::Lqf | PolicyKind::Pfabric)
                && !n.effective_queue().is_fixed_range()
            {
                return err(format!(
                    "node {:?}: {:?} ranks are not monotone and need a fixed-range queue (hffs or bh)",
                    n.id, n.policy
                ));
            }
        }
        let mut flow_ids = HashSet::new();
        for f in &self.flows {
            if !flow_ids.insert(f.id) {
                return err(format!("duplicate flow id {}", f.id));
            }
            if !by_id.contains_key(f.leaf.as_str()) {
                return err(format!("flow {} maps to unknown node {:?}", f.id, f.leaf));
            }
            check_params(&format!("flow {}", f.id), f.share, f.reservation, f.limit)?;
            if f.pacing_rate < 0.0 || !f.pacing_rate.is_finite() {
                return err(format!("flow {} pacing_rate must be nonnegative", f.id));
            }
        }
        for n in &self.nodes {
            if n.policy == PolicyKind::Pfabric
                && self
                    .nodes
                    .iter()
                    .any(|c| c.parent.as_deref() == Some(&n.id))
            {
                return err(format!(
                    "pfabric node {:?} may only have flow children",
                    n.id
                ));
            }
        }
        if self.shaper.granularity_ns == 0 || self.shaper.num_buckets < 2 {
            return err("shaper needs a positive granularity and at least two buckets".into());
        }
        Ok(())
    }
}

fn check_params(who: &str, share: f64, reservation: f64, limit: f64) -> Result<(), SchedError> {
    let bad = |m: &str| Err(SchedError::Config(format!("{who}: {m}")));
    if !(share > 0.0 && share.is_finite()) {
        return bad("share must be positive");
    }
    if !(reservation >= 0.0 && reservation.is_finite()) || !(limit >= 0.0 && limit.is_finite()) {
        return bad("reservation and limit must be nonnegative");
    }
    if reservation > 0.0 && limit > 0.0 && reservation > limit {
        return bad("reservation exceeds limit");
    }
    Ok(())
}
