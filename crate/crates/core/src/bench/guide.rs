use std::fmt;

/// Below this many priority levels a comparison queue is good enough.
pub const LEVELS_THRESHOLD: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeKind {
    Fixed,
    Moving,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccupancyLevel {
    Sparse,
    Dense,
    Any,
}

impl OccupancyLevel {
    /// Dense from 0.9 of buckets nonempty.
    pub fn from_ratio(r: f64) -> Self {
        if r >= 0.9 {
            OccupancyLevel::Dense
        } else {
            OccupancyLevel::Sparse
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recommendation {
    ComparisonQueue,
    HierarchicalFfs,
    Cffs,
    Approximate,
}

impl Recommendation {
    pub fn as_str(self) -> &'static str {
        match self {
            Recommendation::ComparisonQueue => "comparison queue acceptable",
            Recommendation::HierarchicalFfs => "hierarchical FFS",
            Recommendation::Cffs => "cFFS",
            Recommendation::Approximate => "approximate gradient queue",
        }
    }
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Picks a queue from the number of priority levels, how the rank range
/// behaves and how full the buckets are.
pub fn select_queue_guide(levels: usize, range: RangeKind, occ: OccupancyLevel) -> Recommendation {
    if levels < LEVELS_THRESHOLD {
        return Recommendation::ComparisonQueue;
    }
    match (range, occ) {
        (RangeKind::Fixed, _) => Recommendation::HierarchicalFfs,
        (RangeKind::Moving, OccupancyLevel::Dense) => Recommendation::Approximate,
        _ => Recommendation::Cffs,
    }
}
