use std::cmp::Ordering;

use super::search::{check_pair, finish};
use super::{backward_dijkstra, forward_dijkstra, prune, Graph, Mask, RankTag, RankedPath, RoutingParams};
use crate::error::{Error, Result};

/// One forward search: where it started, its hop budget, what was masked,
/// and the width it returned.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRun {
    pub source: usize,
    pub budget: Option<u32>,
    pub mask: Mask,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToraStats {
    pub backward_runs: usize,
    pub forward_runs: Vec<ForwardRun>,
}

/// Ranking among candidates: wider first, then fewer hops, then the
/// lexicographically smaller node sequence.
pub fn path_order(a: &RankedPath, b: &RankedPath) -> Ordering {
    b.metrics
        .strength
        .total_cmp(&a.metrics.strength)
        .then(a.metrics.hops.cmp(&b.metrics.hops))
        .then_with(|| a.nodes.cmp(&b.nodes))
}

/// Candidate complete paths accumulated across deviation rounds, unique by
/// node sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePool {
    paths: Vec<RankedPath>,
}

impl CandidatePool {
    pub fn insert(&mut self, p: RankedPath) -> bool {
        if self.paths.iter().any(|q| q.nodes == p.nodes) {
            return false;
        }
        self.paths.push(p);
        true
    }

    pub fn pop_best(&mut self) -> Option<RankedPath> {
        let (i, _) = self.paths.iter().enumerate().min_by(|(_, a), (_, b)| path_order(a, b))?;
        Some(self.paths.swap_remove(i))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RankedPath> {
        self.paths.iter()
    }
}

/// Search state for one (s, d) pair: backward labels computed once, the
/// established paths, and the candidate pool.
#[derive(Debug, Clone)]
pub struct ToraSearch<'g> {
    g: &'g Graph,
    s: usize,
    d: usize,
    h_th: u32,
    b: Vec<u32>,
    pub established: Vec<RankedPath>,
    pub pool: CandidatePool,
    pub stats: ToraStats,
}

impl<'g> ToraSearch<'g> {
    pub fn new(g: &'g Graph, s: usize, d: usize, h_th: u32) -> Result<Self> {
        check_pair(g, s, d)?;
        let b = backward_dijkstra(g, d);
        Ok(ToraSearch {
            g,
            s,
            d,
            h_th,
            b,
            established: Vec::new(),
            pool: CandidatePool::default(),
            stats: ToraStats {
                backward_runs: 1,
                forward_runs: Vec::new(),
            },
        })
    }

    pub fn backward_labels(&self) -> &[u32] {
        &self.b
    }

    fn forward(&mut self, source: usize, budget: u32, mask: Mask) -> Result<Option<RankedPath>> {
        let labels = forward_dijkstra(self.g, source, &self.b, Some(budget), Some(&mask));
        let found = finish(self.g, &labels, source, self.d, budget, RankTag::J1)?;
        self.stats.forward_runs.push(ForwardRun {
            source,
            budget: Some(budget),
            mask,
            width: found.as_ref().map(|p| p.metrics.strength),
        });
        Ok(found)
    }

    /// Best feasible path, established as J1.
    pub fn wfpf(&mut self) -> Result<Option<RankedPath>> {
        if !self.established.is_empty() {
            return Err(Error::ContractViolation("widest path already established".into()));
        }
        if self.b[self.s] >= self.h_th {
            return Ok(None);
        }
        let found = self.forward(self.s, self.h_th, Mask::default())?;
        if let Some(p) = &found {
            self.established.push(p.clone());
        }
        Ok(found)
    }

    /// Next best feasible path by deviating from the newest established path.
    pub fn dpr_next(&mut self) -> Result<Option<RankedPath>> {
        let newest = self
            .established
            .last()
            .ok_or_else(|| Error::ContractViolation("deviation ranking needs an established path".into()))?
            .nodes
            .clone();
        for i in 0..newest.len() - 1 {
            let u = newest[i];
            let budget = self.h_th.saturating_sub(i as u32);
            if budget == 0 || self.b[u] >= budget {
                continue;
            }
            let root = &newest[..=i];
            let masked_edges: Vec<(usize, usize)> = self
                .established
                .iter()
                .filter(|p| p.nodes.len() > i + 1 && p.nodes[..=i] == *root)
                .map(|p| (u, p.nodes[i + 1]))
                .collect();
            let mask = Mask::new(root[..i].to_vec(), masked_edges);
            let Some(dev) = self.forward(u, budget, mask)? else {
                continue;
            };
            let mut nodes = root[..i].to_vec();
            nodes.extend_from_slice(&dev.nodes);
            if self.established.iter().any(|p| p.nodes == nodes) {
                continue;
            }
            let cand = RankedPath::from_nodes(self.g, nodes, RankTag::J1)?;
            debug_assert!(cand.is_simple());
            self.pool.insert(cand);
        }
        let Some(mut next) = self.pool.pop_best() else {
            return Ok(None);
        };
        next.rank = RankTag::top(self.established.len());
        self.established.push(next.clone());
        Ok(Some(next))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToraOutcome {
    pub paths: Vec<RankedPath>,
    pub stats: ToraStats,
}

/// Prunes by connectivity, then finds up to three best feasible paths from
/// `s` to `d`.
pub fn tora_top3(g: &Graph, s: usize, d: usize, params: &RoutingParams) -> Result<ToraOutcome> {
    params.validate()?;
    let pruned = prune(g, params.c_th, &[s, d]);
    let mut search = ToraSearch::new(&pruned.graph, s, d, params.h_th)?;
    let mut paths = Vec::new();
    if let Some(j1) = search.wfpf()? {
        paths.push(j1);
        for _ in 0..2 {
            match search.dpr_next()? {
                Some(p) => paths.push(p),
                None => break,
            }
        }
    }
    // A heuristic J1 can be narrower than a later deviation; report in rank order.
    paths.sort_by(path_order);
    for (k, p) in paths.iter_mut().enumerate() {
        p.rank = RankTag::top(k);
    }
    Ok(ToraOutcome {
        paths,
        stats: search.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::EdgeMetrics;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> Graph {
        let mut g = Graph::new(n);
        for &(u, v, w) in edges {
            g.add_edge(u, v, EdgeMetrics::new(w, 1.0)).unwrap();
        }
        g
    }

    #[test]
    fn triangle_has_exactly_two_paths() {
        let g = graph(3, &[(0, 1, 0.7), (1, 2, 0.6), (0, 2, 0.4)]);
        let mut t = ToraSearch::new(&g, 0, 2, 6).unwrap();
        assert_eq!(t.wfpf().unwrap().unwrap().nodes, vec![0, 1, 2]);
        let j2 = t.dpr_next().unwrap().unwrap();
        assert_eq!(j2.nodes, vec![0, 2]);
        assert_eq!(j2.rank, RankTag::J2);
        assert!(t.dpr_next().unwrap().is_none());
    }

    #[test]
    fn dpr_needs_established() {
        let g = graph(3, &[(0, 1, 0.7), (1, 2, 0.6)]);
        let mut t = ToraSearch::new(&g, 0, 2, 6).unwrap();
        assert!(t.dpr_next().is_err());
    }

    #[test]
    fn three_disjoint_paths_ranked() {
        let g = graph(
            5,
            &[(0, 1, 0.9), (1, 4, 0.8), (0, 2, 0.5), (2, 4, 0.6), (0, 3, 0.7), (3, 4, 0.95)],
        );
        let out = tora_top3(&g, 0, 4, &RoutingParams::default()).unwrap();
        let widths: Vec<f64> = out.paths.iter().map(|p| p.metrics.strength).collect();
        assert_eq!(widths, vec![0.8, 0.7, 0.5]);
        let ranks: Vec<RankTag> = out.paths.iter().map(|p| p.rank).collect();
        assert_eq!(ranks, vec![RankTag::J1, RankTag::J2, RankTag::J3]);
        assert_eq!(out.stats.backward_runs, 1);
        // One run for J1, two branch nodes on J1, two on J2.
        assert_eq!(out.stats.forward_runs.len(), 5);
    }

    #[test]
    fn pruned_away_source_gives_nothing() {
        let mut g = Graph::new(3);
        g.add_edge(0, 1, EdgeMetrics::new(0.9, 0.5)).unwrap();
        g.add_edge(1, 2, EdgeMetrics::new(0.9, 1.0)).unwrap();
        let out = tora_top3(&g, 0, 2, &RoutingParams::default()).unwrap();
        assert!(out.paths.is_empty());
    }

    #[test]
    fn pool_ranks_and_dedupes() {
        let g = graph(4, &[(0, 1, 0.5), (1, 3, 0.5), (0, 2, 0.5), (2, 3, 0.5), (0, 3, 0.5)]);
        let mut pool = CandidatePool::default();
        for nodes in [vec![0, 2, 3], vec![0, 1, 3], vec![0, 3], vec![0, 1, 3]] {
            pool.insert(RankedPath::from_nodes(&g, nodes, RankTag::J2).unwrap());
        }
        assert_eq!(pool.len(), 3);
        assert_eq!(pool.pop_best().unwrap().nodes, vec![0, 3]);
        assert_eq!(pool.pop_best().unwrap().nodes, vec![0, 1, 3]);
        assert_eq!(pool.pop_best().unwrap().nodes, vec![0, 2, 3]);
        assert!(pool.pop_best().is_none());
    }
}
