use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{Graph, Mask, RankTag, RankedPath, Width};
use crate::error::{Error, Result};

/// Hop label of an unreachable node.
pub const HOPS_INF: u32 = u32::MAX;

/// Labels left by one forward search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchLabels {
    pub w: Vec<Width>,
    pub f: Vec<u32>,
    pub b: Vec<u32>,
    pub pred: Vec<Option<usize>>,
}

impl SearchLabels {
    /// Predecessor chain from `source` to `target`, if `target` was reached.
    pub fn path_to(&self, source: usize, target: usize) -> Option<Vec<usize>> {
        if self.w[target] == Width::Unreached {
            return None;
        }
        let mut nodes = vec![target];
        let mut cur = target;
        while cur != source {
            cur = self.pred[cur]?;
            nodes.push(cur);
            if nodes.len() > self.w.len() {
                return None;
            }
        }
        nodes.reverse();
        Some(nodes)
    }
}

/// Least hop count from every node to `d`; `HOPS_INF` when unreachable.
pub fn backward_dijkstra(g: &Graph, d: usize) -> Vec<u32> {
    let mut b = vec![HOPS_INF; g.node_count()];
    b[d] = 0;
    let mut queue = VecDeque::from([d]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.neighbors(u) {
            if b[v] == HOPS_INF {
                b[v] = b[u] + 1;
                queue.push_back(v);
            }
        }
    }
    b
}

/// Forward widest-path search with the hop-feasibility preference rule.
///
/// `budget` is the hop constraint; `None` disables it. Nodes with an
/// unreachable backward label never win a comparison.
pub fn forward_dijkstra(g: &Graph, s: usize, b: &[u32], budget: Option<u32>, mask: Option<&Mask>) -> SearchLabels {
    let n = g.node_count();
    let mut labels = SearchLabels {
        w: vec![Width::Unreached; n],
        f: vec![0; n],
        b: b.to_vec(),
        pred: vec![None; n],
    };
    let feasible = |f: u32, b: u32| match budget {
        Some(h) => f.saturating_add(b) < h,
        None => b != HOPS_INF,
    };
    let mut visited = vec![false; n];
    let mut heap = BinaryHeap::new();
    labels.w[s] = Width::Max;
    heap.push((Width::Max, Reverse(s)));
    while let Some((w, Reverse(u))) = heap.pop() {
        if visited[u] || w != labels.w[u] {
            continue;
        }
        visited[u] = true;
        for &(v, m) in g.neighbors(u) {
            if visited[v] || mask.is_some_and(|mk| mk.blocks(u, v)) {
                continue;
            }
            let tw = labels.w[u].min_with(m.strength);
            let tf = labels.f[u] + m.hops();
            let bv = b[v];
            let (vw, vf) = (labels.w[v], labels.f[v]);
            let take = if tw > vw && feasible(tf, bv) {
                true
            } else if tw < vw && feasible(vf, bv) {
                false
            } else {
                tf.saturating_add(bv) < vf.saturating_add(bv)
            };
            if take {
                labels.w[v] = tw;
                labels.f[v] = tf;
                labels.pred[v] = Some(u);
                heap.push((tw, Reverse(v)));
            }
        }
    }
    labels
}

fn check_endpoints(g: &Graph, s: usize, d: usize) -> Result<()> {
    let n = g.node_count();
    if s >= n || d >= n {
        return Err(Error::invalid(format!("endpoints ({s},{d}) outside {n} nodes")));
    }
    if s == d {
        return Err(Error::invalid("source equals destination"));
    }
    Ok(())
}

/// Widest path from `s` to `d` with fewer than `h_th` hops, or `None`.
pub fn wfpf(g: &Graph, s: usize, d: usize, h_th: u32) -> Result<Option<RankedPath>> {
    check_endpoints(g, s, d)?;
    let b = backward_dijkstra(g, d);
    if b[s] >= h_th {
        return Ok(None);
    }
    let labels = forward_dijkstra(g, s, &b, Some(h_th), None);
    finish(g, &labels, s, d, h_th, RankTag::J1)
}

pub(super) fn finish(
    g: &Graph,
    labels: &SearchLabels,
    s: usize,
    d: usize,
    budget: u32,
    rank: RankTag,
) -> Result<Option<RankedPath>> {
    if labels.w[d] == Width::Unreached || labels.f[d] >= budget {
        return Ok(None);
    }
    let nodes = labels
        .path_to(s, d)
        .ok_or_else(|| Error::ContractViolation("broken predecessor chain".into()))?;
    RankedPath::from_nodes(g, nodes, rank).map(Some)
}

pub(super) fn check_pair(g: &Graph, s: usize, d: usize) -> Result<()> {
    check_endpoints(g, s, d)
}
