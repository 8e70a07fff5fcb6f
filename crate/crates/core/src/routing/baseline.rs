use super::oracle::hop_bounded_widest_by;
use super::{Graph, RankTag, RankedPath, RoutingParams};
use crate::error::Result;

/// Connectivity-first routing: the path maximizing its weakest link
/// connectivity within the hop bound, fewer hops on ties. Reports failure
/// unless the result meets the connectivity constraint.
pub fn baseline_car(g: &Graph, s: usize, d: usize, params: &RoutingParams) -> Result<Option<RankedPath>> {
    params.validate()?;
    let found = hop_bounded_widest_by(g, s, d, params.h_th as usize - 1, |m| m.connectivity)?;
    let Some((_, nodes)) = found else {
        return Ok(None);
    };
    let path = RankedPath::from_nodes(g, nodes, RankTag::J1)?;
    Ok(params.feasible(&path.metrics).then_some(path))
}

/// The one-hop path `s → d` if that edge exists.
pub fn baseline_direct(g: &Graph, s: usize, d: usize) -> Option<RankedPath> {
    g.edge(s, d).map(|_| RankedPath::from_nodes(g, vec![s, d], RankTag::Direct).expect("edge exists"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::EdgeMetrics;

    #[test]
    fn car_prefers_higher_bottleneck_connectivity() {
        // 0-1-3 has connectivities (1.0, 0.9); 0-2-3 has (0.95, 0.95).
        let mut g = Graph::new(4);
        g.add_edge(0, 1, EdgeMetrics::new(0.9, 1.0)).unwrap();
        g.add_edge(1, 3, EdgeMetrics::new(0.9, 0.9)).unwrap();
        g.add_edge(0, 2, EdgeMetrics::new(0.2, 0.95)).unwrap();
        g.add_edge(2, 3, EdgeMetrics::new(0.2, 0.95)).unwrap();
        let params = RoutingParams { c_th: 0.5, ..RoutingParams::default() };
        assert_eq!(baseline_car(&g, 0, 3, &params).unwrap().unwrap().nodes, vec![0, 2, 3]);
        // Under the default 0.999 constraint neither qualifies.
        assert!(baseline_car(&g, 0, 3, &RoutingParams::default()).unwrap().is_none());
    }

    #[test]
    fn car_breaks_ties_by_hops() {
        let mut g = Graph::new(4);
        g.add_edge(0, 1, EdgeMetrics::new(0.9, 1.0)).unwrap();
        g.add_edge(1, 2, EdgeMetrics::new(0.9, 1.0)).unwrap();
        g.add_edge(2, 3, EdgeMetrics::new(0.9, 1.0)).unwrap();
        g.add_edge(0, 3, EdgeMetrics::new(0.1, 1.0)).unwrap();
        let p = baseline_car(&g, 0, 3, &RoutingParams::default()).unwrap().unwrap();
        assert_eq!(p.nodes, vec![0, 3]);
    }

    #[test]
    fn direct_only_when_edge_exists() {
        let mut g = Graph::new(3);
        g.add_edge(0, 2, EdgeMetrics::new(0.4, 1.0)).unwrap();
        let p = baseline_direct(&g, 0, 2).unwrap();
        assert_eq!((p.nodes.clone(), p.rank), (vec![0, 2], RankTag::Direct));
        assert!(baseline_direct(&g, 1, 2).is_none());
    }
}
