//! Exact reference solvers and random instances for checking the routers.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use super::{Graph, Width};
use crate::error::{Error, Result};
use crate::metrics::EdgeMetrics;

#[derive(Clone, Copy)]
enum Step {
    Carry,
    From(usize),
}

/// Exact widest path from `s` to `d` using at most `h_th − 1` hops.
///
/// Dynamic program over (hops used, node) on walks; the optimal walk is
/// loop-erased into a simple path of at least the same width.
pub fn oracle_widest_hop_bounded(g: &Graph, s: usize, d: usize, h_th: u32) -> Result<Option<(f64, Vec<usize>)>> {
    if h_th > 64 {
        return Err(Error::invalid(format!("hop bound {h_th} above 64")));
    }
    hop_bounded_widest_by(g, s, d, h_th.saturating_sub(1) as usize, |m| m.strength)
}

/// Widest path under `key` with at most `max_hops` edges, using the fewest
/// hops among optimal walks.
pub(super) fn hop_bounded_widest_by(
    g: &Graph,
    s: usize,
    d: usize,
    max_hops: usize,
    key: impl Fn(&EdgeMetrics) -> f64,
) -> Result<Option<(f64, Vec<usize>)>> {
    let n = g.node_count();
    if s >= n || d >= n || s == d {
        return Err(Error::invalid(format!("bad endpoints ({s},{d})")));
    }
    if max_hops == 0 {
        return Ok(None);
    }
    let mut best = vec![vec![Width::Unreached; n]; max_hops + 1];
    let mut step = vec![vec![Step::Carry; n]; max_hops + 1];
    best[0][s] = Width::Max;
    for h in 1..=max_hops {
        let (prev, cur) = best.split_at_mut(h);
        let prev = &prev[h - 1];
        let cur = &mut cur[0];
        cur.copy_from_slice(prev);
        for (u, &pu) in prev.iter().enumerate() {
            if pu == Width::Unreached {
                continue;
            }
            for (v, m) in g.neighbors(u) {
                let cand = pu.min_with(key(m));
                if cand > cur[*v] {
                    cur[*v] = cand;
                    step[h][*v] = Step::From(u);
                }
            }
        }
    }
    let Some(width) = best[max_hops][d].value() else {
        return Ok(None);
    };
    let layer = (1..=max_hops).find(|&h| best[h][d].value() == Some(width)).unwrap();
    let mut walk = vec![d];
    let (mut h, mut v) = (layer, d);
    while h > 0 {
        if let Step::From(u) = step[h][v] {
            walk.push(u);
            v = u;
        }
        h -= 1;
    }
    walk.reverse();
    debug_assert_eq!(walk[0], s);
    Ok(Some((width, loop_erase(&walk))))
}

fn loop_erase(walk: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(walk.len());
    for &v in walk {
        if let Some(i) = out.iter().position(|&x| x == v) {
            out.truncate(i + 1);
        } else {
            out.push(v);
        }
    }
    out
}

/// Every simple path from `s` to `d` with at most `max_hops` edges.
pub fn enumerate_simple_paths(g: &Graph, s: usize, d: usize, max_hops: usize) -> Vec<Vec<usize>> {
    fn dfs(g: &Graph, d: usize, max_hops: usize, path: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == d {
            out.push(path.clone());
            return;
        }
        if path.len() > max_hops {
            return;
        }
        for &(v, _) in g.neighbors(u) {
            if !on[v] {
                on[v] = true;
                path.push(v);
                dfs(g, d, max_hops, path, on, out);
                path.pop();
                on[v] = false;
            }
        }
    }
    let mut on = vec![false; g.node_count()];
    on[s] = true;
    let mut out = Vec::new();
    dfs(g, d, max_hops, &mut vec![s], &mut on, &mut out);
    out
}

/// Widths of the `k` widest simple paths with fewer than `h_th` hops and
/// connectivity above `c_th`, widest first.
pub fn brute_force_top_k(g: &Graph, s: usize, d: usize, h_th: u32, c_th: f64, k: usize) -> Vec<f64> {
    let mut widths: Vec<f64> = enumerate_simple_paths(g, s, d, h_th.saturating_sub(1) as usize)
        .iter()
        .filter_map(|p| g.path_metrics(p).ok())
        .filter(|m| m.connectivity > c_th)
        .map(|m| m.strength)
        .collect();
    widths.sort_by(|a, b| b.total_cmp(a));
    widths.truncate(k);
    widths
}

/// Textbook widest-path Dijkstra: best bottleneck width from `s` to every node.
pub fn classic_widest_widths(g: &Graph, s: usize) -> Vec<Width> {
    let mut w = vec![Width::Unreached; g.node_count()];
    let mut done = vec![false; g.node_count()];
    w[s] = Width::Max;
    let mut heap = BinaryHeap::from([(Width::Max, Reverse(s))]);
    while let Some((wu, Reverse(u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, m) in g.neighbors(u) {
            let c = wu.min_with(m.strength);
            if !done[v] && c > w[v] {
                w[v] = c;
                heap.push((c, Reverse(v)));
            }
        }
    }
    w
}

/// Random graph on `n` nodes: each pair joined with probability `p`, widths
/// drawn from a small grid (to provoke ties), and a `low_conn` fraction of
/// edges below the default connectivity threshold.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64, low_conn: f64) -> Graph {
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                let strength = rng.random_range(1..=20) as f64 / 20.0;
                let connectivity = if rng.random_bool(low_conn) {
                    rng.random_range(0.3..0.999)
                } else {
                    1.0
                };
                g.add_edge(u, v, EdgeMetrics::new(strength, connectivity)).unwrap();
            }
        }
    }
    g
}
