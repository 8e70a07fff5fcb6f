//! Top-3 QoS path routing on a virtual topology.
//!
//! Connectivity is handled by pruning: every surviving edge has
//! `l_C > C_th`, so the remaining problem is a hop-bounded widest path,
//! solved heuristically by a two-directional search and extended to the
//! second and third best paths by deviation ranking.

mod baseline;
mod dpr;
mod graph;
pub mod oracle;
mod search;

pub use baseline::{baseline_car, baseline_direct};
pub use dpr::{path_order, tora_top3, CandidatePool, ForwardRun, ToraOutcome, ToraSearch, ToraStats};
pub use graph::{Graph, Mask};
pub use search::{backward_dijkstra, forward_dijkstra, wfpf, SearchLabels, HOPS_INF};

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PathMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoutingParams {
    pub c_th: f64,
    pub h_th: u32,
    pub gamma_th: f64,
    pub gamma_m: f64,
}

impl Default for RoutingParams {
    fn default() -> Self {
        RoutingParams {
            c_th: 0.999,
            h_th: 6,
            gamma_th: -80.0,
            gamma_m: crate::metrics::GAMMA_MAX_DBM,
        }
    }
}

impl RoutingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_th > 0.0 && self.c_th < 1.0) {
            return Err(Error::invalid(format!("C_th {} outside (0, 1)", self.c_th)));
        }
        if self.h_th < 2 {
            return Err(Error::invalid(format!("H_th {} below 2", self.h_th)));
        }
        if !(self.gamma_th < self.gamma_m) {
            return Err(Error::invalid(format!(
                "γ_th {} must be below γ_M {}",
                self.gamma_th, self.gamma_m
            )));
        }
        Ok(())
    }

    /// Whether path metrics meet the connectivity and hop constraints.
    pub fn feasible(&self, m: &PathMetrics) -> bool {
        m.connectivity > self.c_th && m.hops < self.h_th
    }
}

/// Path width label. `Max` is the source sentinel, above every real width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Width {
    Unreached,
    Finite(f64),
    Max,
}

impl Width {
    pub fn min_with(self, w: f64) -> Width {
        match self {
            Width::Unreached => Width::Unreached,
            Width::Finite(x) => Width::Finite(x.min(w)),
            Width::Max => Width::Finite(w),
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Width::Finite(x) => Some(x),
            _ => None,
        }
    }
}

impl Eq for Width {}

impl Ord for Width {
    fn cmp(&self, other: &Self) -> Ordering {
        let rank = |w: &Width| match w {
            Width::Unreached => 0,
            Width::Finite(_) => 1,
            Width::Max => 2,
        };
        match (self, other) {
            (Width::Finite(a), Width::Finite(b)) => a.total_cmp(b),
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

impl PartialOrd for Width {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankTag {
    J1,
    J2,
    J3,
    Mended,
    Direct,
}

impl RankTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RankTag::J1 => "J1",
            RankTag::J2 => "J2",
            RankTag::J3 => "J3",
            RankTag::Mended => "mended",
            RankTag::Direct => "direct",
        }
    }

    pub fn top(k: usize) -> RankTag {
        match k {
            0 => RankTag::J1,
            1 => RankTag::J2,
            _ => RankTag::J3,
        }
    }
}

impl fmt::Display for RankTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPath {
    pub nodes: Vec<usize>,
    pub metrics: PathMetrics,
    pub rank: RankTag,
}

impl RankedPath {
    /// Builds a path over edges of `g`, computing its metrics.
    pub fn from_nodes(g: &Graph, nodes: Vec<usize>, rank: RankTag) -> Result<Self> {
        let metrics = g.path_metrics(&nodes)?;
        Ok(RankedPath { nodes, metrics, rank })
    }

    pub fn is_simple(&self) -> bool {
        is_simple(&self.nodes)
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn contains_link(&self, a: usize, b: usize) -> bool {
        self.links().any(|(u, v)| (u, v) == (a, b) || (u, v) == (b, a))
    }
}

pub fn is_simple(nodes: &[usize]) -> bool {
    let mut seen: Vec<usize> = nodes.to_vec();
    seen.sort_unstable();
    seen.windows(2).all(|w| w[0] != w[1])
}

/// Edges with `l_C > C_th` and the nodes still touching one, plus `keep`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedGraph {
    pub graph: Graph,
    pub present: Vec<bool>,
}

pub fn prune(g: &Graph, c_th: f64, keep: &[usize]) -> PrunedGraph {
    let mut graph = Graph::new(g.node_count());
    for (u, v, m) in g.edges() {
        if m.connectivity > c_th {
            graph.add_edge(u, v, m).expect("edge copied from a simple graph");
        }
    }
    let present = (0..g.node_count())
        .map(|u| graph.degree(u) > 0 || keep.contains(&u))
        .collect();
    PrunedGraph { graph, present }
}

impl PrunedGraph {
    pub fn node_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::EdgeMetrics;

    #[test]
    fn width_order() {
        assert!(Width::Unreached < Width::Finite(0.0));
        assert!(Width::Finite(0.3) < Width::Finite(0.4));
        assert!(Width::Finite(1.0) < Width::Max);
        assert_eq!(Width::Max.min_with(0.4), Width::Finite(0.4));
    }

    #[test]
    fn default_params_are_valid() {
        let p = RoutingParams::default();
        assert_eq!((p.c_th, p.h_th), (0.999, 6));
        p.validate().unwrap();
        assert!(RoutingParams { h_th: 1, ..p }.validate().is_err());
        assert!(RoutingParams { c_th: 1.0, ..p }.validate().is_err());
    }

    #[test]
    fn prune_examples() {
        let mut g = Graph::new(3);
        g.add_edge(0, 1, EdgeMetrics::new(0.5, 1.0)).unwrap();
        g.add_edge(1, 2, EdgeMetrics::new(0.5, 1.0)).unwrap();
        let p = prune(&g, 0.999, &[]);
        assert_eq!(p.graph, g);
        assert_eq!(p.node_count(), 3);

        let mut h = Graph::new(3);
        h.add_edge(0, 1, EdgeMetrics::new(0.5, 1.0)).unwrap();
        h.add_edge(1, 2, EdgeMetrics::new(0.5, 0.999)).unwrap();
        let p = prune(&h, 0.999, &[0]);
        assert_eq!(p.graph.edge_count(), 1);
        assert_eq!(p.present, vec![true, true, false]);
        // s and d survive even when isolated.
        let mut k = Graph::new(3);
        k.add_edge(0, 1, EdgeMetrics::new(0.5, 0.2)).unwrap();
        let p = prune(&k, 0.999, &[0, 2]);
        assert_eq!(p.present, vec![true, false, true]);
    }
}
