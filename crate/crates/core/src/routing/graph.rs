use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::{EdgeMetrics, PathMetrics};

/// Simple undirected graph over nodes `0..n` with metric-annotated edges.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Graph {
    adj: Vec<Vec<(usize, EdgeMetrics)>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn add_edge(&mut self, u: usize, v: usize, m: EdgeMetrics) -> Result<()> {
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(Error::invalid(format!("edge ({u},{v}) outside {n} nodes")));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop at {u}")));
        }
        match self.adj[u].binary_search_by_key(&v, |&(x, _)| x) {
            Ok(_) => Err(Error::invalid(format!("parallel edge ({u},{v})"))),
            Err(i) => {
                self.adj[u].insert(i, (v, m));
                let j = self.adj[v].binary_search_by_key(&u, |&(x, _)| x).unwrap_err();
                self.adj[v].insert(j, (u, m));
                Ok(())
            }
        }
    }

    pub fn edge(&self, u: usize, v: usize) -> Option<EdgeMetrics> {
        let row = self.adj.get(u)?;
        row.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| row[i].1)
    }

    /// Neighbours of `u` in increasing id order.
    pub fn neighbors(&self, u: usize) -> &[(usize, EdgeMetrics)] {
        &self.adj[u]
    }

    /// Each edge once, as `(u, v, m)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeMetrics)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |(v, _)| u < *v).map(move |&(v, m)| (u, v, m)))
    }

    pub fn path_metrics(&self, nodes: &[usize]) -> Result<PathMetrics> {
        let edges = nodes
            .windows(2)
            .map(|w| {
                self.edge(w[0], w[1])
                    .ok_or_else(|| Error::invalid(format!("no edge ({},{})", w[0], w[1])))
            })
            .collect::<Result<Vec<_>>>()?;
        crate::metrics::path_metrics(&edges)
    }

    /// Copy of the graph with the masked nodes' edges and masked edges removed.
    pub fn without(&self, mask: &Mask) -> Graph {
        let mut g = Graph::new(self.node_count());
        for (u, v, m) in self.edges() {
            if !mask.blocks(u, v) {
                g.add_edge(u, v, m).expect("subgraph of a simple graph");
            }
        }
        g
    }

    /// Edge list text `u,v,l_S,l_C,l_H`, one edge per line.
    pub fn write_edge_list(&self) -> String {
        let mut out = format!("# nodes={}\nu,v,l_S,l_C,l_H\n", self.node_count());
        for (u, v, m) in self.edges() {
            let _ = writeln!(out, "{u},{v},{},{},{}", m.strength, m.connectivity, m.hops());
        }
        out
    }

    pub fn read_edge_list(text: &str, source: &str) -> Result<Graph> {
        let mut n = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix("# nodes=") {
                n = Some(
                    rest.parse::<usize>()
                        .map_err(|_| Error::parse(source, i + 1, "bad node count"))?,
                );
                continue;
            }
            if line.is_empty() || line.starts_with('#') || line.starts_with("u,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(Error::parse(source, i + 1, format!("expected 5 fields, found {}", f.len())));
            }
            let bad = |s: &str| Error::parse(source, i + 1, format!("bad field `{s}`"));
            let u: usize = f[0].parse().map_err(|_| bad(f[0]))?;
            let v: usize = f[1].parse().map_err(|_| bad(f[1]))?;
            let s: f64 = f[2].parse().map_err(|_| bad(f[2]))?;
            let c: f64 = f[3].parse().map_err(|_| bad(f[3]))?;
            if f[4] != "1" {
                return Err(Error::parse(source, i + 1, "l_H must be 1"));
            }
            rows.push((i + 1, u, v, EdgeMetrics::new(s, c)));
        }
        let n = n.unwrap_or_else(|| rows.iter().map(|&(_, u, v, _)| u.max(v) + 1).max().unwrap_or(0));
        let mut g = Graph::new(n);
        for (line, u, v, m) in rows {
            g.add_edge(u, v, m)
                .map_err(|e| Error::parse(source, line, e.to_string()))?;
        }
        Ok(g)
    }
}

/// Nodes and undirected edges hidden from a search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mask {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    node_set: HashSet<usize>,
    edge_set: HashSet<(usize, usize)>,
}

impl Mask {
    pub fn new(nodes: Vec<usize>, edges: Vec<(usize, usize)>) -> Self {
        let node_set = nodes.iter().copied().collect();
        let edge_set = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        Mask {
            nodes,
            edges,
            node_set,
            edge_set,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    pub fn hides_node(&self, u: usize) -> bool {
        self.node_set.contains(&u)
    }

    pub fn blocks(&self, u: usize, v: usize) -> bool {
        self.hides_node(u) || self.hides_node(v) || self.edge_set.contains(&(u.min(v), u.max(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_graph_rules() {
        let mut g = Graph::new(3);
        g.add_edge(0, 1, EdgeMetrics::new(0.5, 1.0)).unwrap();
        assert!(g.add_edge(1, 0, EdgeMetrics::new(0.5, 1.0)).is_err());
        assert!(g.add_edge(2, 2, EdgeMetrics::new(0.5, 1.0)).is_err());
        assert!(g.add_edge(0, 3, EdgeMetrics::new(0.5, 1.0)).is_err());
        assert_eq!(g.edge(1, 0), Some(EdgeMetrics::new(0.5, 1.0)));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edge_list_round_trip() {
        let mut g = Graph::new(5);
        g.add_edge(3, 1, EdgeMetrics::new(0.25, 1.0)).unwrap();
        g.add_edge(0, 4, EdgeMetrics::new(0.1 + 0.2, 0.9995)).unwrap();
        let text = g.write_edge_list();
        assert_eq!(Graph::read_edge_list(&text, "mem").unwrap(), g);
        assert!(Graph::read_edge_list("0,1,0.5,1,2\n", "x").is_err());
    }

    #[test]
    fn mask_removes_nodes_and_edges() {
        let mut g = Graph::new(4);
        for (u, v) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            g.add_edge(u, v, EdgeMetrics::new(0.5, 1.0)).unwrap();
        }
        let m = Mask::new(vec![1], vec![(3, 2)]);
        let h = g.without(&m);
        assert_eq!(h.edges().map(|(u, v, _)| (u, v)).collect::<Vec<_>>(), vec![(0, 3)]);
    }
}
