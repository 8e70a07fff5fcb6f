use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rope_core::routing::oracle::{
    brute_force_top_k, classic_widest_widths, enumerate_simple_paths, oracle_widest_hop_bounded, random_graph,
};
use rope_core::routing::{
    backward_dijkstra, baseline_car, forward_dijkstra, prune, tora_top3, wfpf, Graph, RoutingParams, Width,
};

fn params(h_th: u32) -> RoutingParams {
    RoutingParams {
        h_th,
        ..RoutingParams::default()
    }
}

#[test]
fn wfpf_never_beats_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut equal = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=30);
        let density = rng.random_range(0.05..0.4);
        let g = random_graph(&mut rng, n, density, 0.0);
        let h = rng.random_range(3..=6);
        let got = wfpf(&g, 0, n - 1, h).unwrap();
        let best = oracle_widest_hop_bounded(&g, 0, n - 1, h).unwrap();
        match (&got, &best) {
            (Some(p), Some((w, _))) => {
                assert!(p.metrics.strength <= *w);
                assert!(p.metrics.hops < h && p.is_simple());
                if p.metrics.strength == *w {
                    equal += 1;
                }
            }
            (Some(_), None) => panic!("heuristic found a path the oracle missed"),
            (None, None) => equal += 1,
            (None, Some(_)) => {}
        }
    }
    assert!(equal >= 800, "equality rate {equal}/1000");
}

#[test]
fn tora_agrees_with_top3_enumeration_when_searches_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for _ in 0..1000 {
        let n = rng.random_range(3..=8);
        let density = rng.random_range(0.3..0.8);
        let g = random_graph(&mut rng, n, density, 0.2);
        let h = rng.random_range(3..=6);
        let p = params(h);
        let (s, d) = (0, n - 1);
        let out = tora_top3(&g, s, d, &p).unwrap();
        let pruned = prune(&g, p.c_th, &[s, d]).graph;
        let exact = out.stats.forward_runs.iter().all(|run| {
            let masked = pruned.without(&run.mask);
            let best = oracle_widest_hop_bounded(&masked, run.source, d, run.budget.unwrap())
                .unwrap()
                .map(|x| x.0);
            best == run.width
        });
        if !exact {
            continue;
        }
        checked += 1;
        let got: Vec<f64> = out.paths.iter().map(|p| p.metrics.strength).collect();
        assert_eq!(got, brute_force_top_k(&g, s, d, h, p.c_th, 3));
    }
    assert!(checked > 500, "only {checked} instances were conditionally exact");
}

#[test]
fn degenerate_search_is_classic_widest_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.random_range(2..=40);
        let density = rng.random_range(0.05..0.5);
        let g = random_graph(&mut rng, n, density, 0.0);
        let labels = forward_dijkstra(&g, 0, &vec![0; n], None, None);
        assert_eq!(labels.w, classic_widest_widths(&g, 0));
    }
}

#[test]
fn car_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let n = rng.random_range(2..=8);
        let g = random_graph(&mut rng, n, 0.5, 0.5);
        let p = params(rng.random_range(3..=6));
        let best = enumerate_simple_paths(&g, 0, n - 1, p.h_th as usize - 1)
            .iter()
            .map(|q| g.path_metrics(q).unwrap())
            .max_by(|a, b| a.connectivity.total_cmp(&b.connectivity).then(b.hops.cmp(&a.hops)));
        let got = baseline_car(&g, 0, n - 1, &p).unwrap();
        match best {
            Some(m) if m.connectivity > p.c_th => {
                let q = got.unwrap();
                assert_eq!((q.metrics.connectivity, q.metrics.hops), (m.connectivity, m.hops));
            }
            _ => assert!(got.is_none()),
        }
    }
}

#[test]
fn backward_labels_are_least_hops() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let g = random_graph(&mut rng, n, 0.35, 0.0);
        let b = backward_dijkstra(&g, n - 1);
        for (u, &bu) in b.iter().enumerate().take(n - 1) {
            let least = enumerate_simple_paths(&g, u, n - 1, n)
                .iter()
                .map(|p| p.len() as u32 - 1)
                .min();
            assert_eq!(least.unwrap_or(u32::MAX), bu);
        }
    }
}

fn arb_graph() -> impl Strategy<Value = (Graph, u32)> {
    (any::<u64>(), 2usize..=30, 0.05f64..0.5, 3u32..=6).prop_map(|(seed, n, p, h)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_graph(&mut rng, n, p, 0.3), h)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn every_returned_path_is_feasible((g, h) in arb_graph()) {
        let d = g.node_count() - 1;
        let p = params(h);
        let out = tora_top3(&g, 0, d, &p).unwrap();
        for (i, path) in out.paths.iter().enumerate() {
            prop_assert!(path.is_simple());
            prop_assert_eq!(path.nodes[0], 0);
            prop_assert_eq!(*path.nodes.last().unwrap(), d);
            prop_assert!(p.feasible(&path.metrics));
            prop_assert_eq!(g.path_metrics(&path.nodes).unwrap(), path.metrics);
            for other in &out.paths[..i] {
                prop_assert_ne!(&other.nodes, &path.nodes);
                prop_assert!(other.metrics.strength >= path.metrics.strength);
            }
        }
        // The complexity contract: one backward search, at most one forward
        // search per branch node plus the initial one.
        prop_assert_eq!(out.stats.backward_runs, 1);
        let mut branches: Vec<usize> = out.paths.iter().map(|p| p.nodes.len() - 1).collect();
        branches.sort_unstable_by(|a, b| b.cmp(a));
        let branch: usize = branches.iter().take(2).sum();
        prop_assert!(out.stats.forward_runs.len() <= 1 + branch);
    }

    #[test]
    fn source_width_sentinel_is_distinct((g, _h) in arb_graph()) {
        let n = g.node_count();
        let labels = forward_dijkstra(&g, 0, &backward_dijkstra(&g, n - 1), Some(64), None);
        prop_assert_eq!(labels.w[0], Width::Max);
        prop_assert_eq!(labels.f[0], 0);
    }
}
