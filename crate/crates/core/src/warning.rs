//! Early-warning trigger and virtual-topology formation.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::metrics::{link_connectivity, link_duration, normalized_strength, EdgeMetrics, RelativeKinematics};
use crate::predictor::StrengthDistribution;
use crate::routing::Graph;
use crate::scenario::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarningCause {
    LowStrength,
    OutOfCoverage,
    None,
}

impl WarningCause {
    pub fn as_str(self) -> &'static str {
        match self {
            WarningCause::LowStrength => "low_strength",
            WarningCause::OutOfCoverage => "out_of_coverage",
            WarningCause::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarningDecision {
    pub vue_id: u32,
    pub triggered: bool,
    pub cause: WarningCause,
    pub mu: f64,
    pub sigma: f64,
}

/// Warn when `mu - sigma <= gamma_th`, or when the predicted position lies
/// beyond `d_i` of the serving site. Coverage wins when both hold.
pub fn check_warning(
    vue_id: u32,
    dist: StrengthDistribution,
    predicted_pos: Vec2,
    bs_pos: Vec2,
    gamma_th: f64,
    d_i: f64,
) -> WarningDecision {
    let sigma = dist.sigma();
    let cause = if predicted_pos.distance(bs_pos) > d_i {
        WarningCause::OutOfCoverage
    } else if dist.mu - sigma <= gamma_th {
        WarningCause::LowStrength
    } else {
        WarningCause::None
    };
    WarningDecision {
        vue_id,
        triggered: cause != WarningCause::None,
        cause,
        mu: dist.mu,
        sigma,
    }
}

/// Percent of links with true RSS at or below `gamma_th` that were flagged.
/// `None` when no link deteriorated.
pub fn successful_warning_ratio(flagged: &[bool], truth: &[f64], gamma_th: f64) -> Result<Option<f64>> {
    if flagged.len() != truth.len() {
        return Err(Error::invalid("predictions and ground truth differ in length"));
    }
    let (mut bad, mut hit) = (0usize, 0usize);
    for (&f, &y) in flagged.iter().zip(truth) {
        if y <= gamma_th {
            bad += 1;
            hit += f as usize;
        }
    }
    Ok((bad > 0).then(|| 100.0 * hit as f64 / bad as f64))
}

/// Inference of a V2V link between two predicted vehicles.
pub trait LinkStrengthModel {
    fn v2v_strength(&self, a: &VehicleState, b: &VehicleState) -> Result<StrengthDistribution>;
}

impl<F> LinkStrengthModel for F
where
    F: Fn(&VehicleState, &VehicleState) -> Result<StrengthDistribution>,
{
    fn v2v_strength(&self, a: &VehicleState, b: &VehicleState) -> Result<StrengthDistribution> {
        self(a, b)
    }
}

/// One vehicle's predicted state at the snapshot and its V2I inference
/// towards the serving site, if any site is known.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedVue {
    pub state: VehicleState,
    pub v2i: Option<(Vec2, StrengthDistribution)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyParams {
    pub gamma_th: f64,
    pub gamma_m: f64,
    pub d_i: f64,
    pub d_v: f64,
    pub tau: f64,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            gamma_th: -80.0,
            gamma_m: -10.0,
            d_i: 400.0,
            d_v: 300.0,
            tau: 1.0,
        }
    }
}

/// Predicted graph at `snapshot_time`. Node `i < vehicles.len()` is
/// `vehicles[i]`; the last node stands for every base station.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualTopology {
    pub graph: Graph,
    pub vehicles: Vec<u32>,
    pub snapshot_time: f64,
}

impl VirtualTopology {
    pub fn bs_node(&self) -> usize {
        self.vehicles.len()
    }

    pub fn node_of(&self, vue: u32) -> Option<usize> {
        self.vehicles.iter().position(|&v| v == vue)
    }

    /// Vehicle id of a node, `None` for the base-station node.
    pub fn vehicle_at(&self, node: usize) -> Option<u32> {
        self.vehicles.get(node).copied()
    }

    /// Edge list with a comment line naming each node.
    pub fn dump(&self) -> String {
        let mut out = format!("# t={}\n", self.snapshot_time);
        for (i, v) in self.vehicles.iter().enumerate() {
            let _ = writeln!(out, "# node {i}=v{v}");
        }
        let _ = writeln!(out, "# node {}=BS", self.bs_node());
        out.push_str(&self.graph.write_edge_list());
        out
    }
}

fn edge(mu: f64, kin: &RelativeKinematics, p: &TopologyParams) -> Result<EdgeMetrics> {
    let strength = normalized_strength(mu.min(p.gamma_m), p.gamma_th, p.gamma_m)?;
    let connectivity = link_connectivity(link_duration(kin)?, p.tau);
    Ok(EdgeMetrics::new(strength, connectivity))
}

/// Admit V2I edges with in-coverage `mu > gamma_th` and V2V edges between
/// vehicles closer than `d_v` whose inferred `mu > gamma_th`.
pub fn build_virtual_topology(
    vues: &[PredictedVue],
    v2v: &dyn LinkStrengthModel,
    params: &TopologyParams,
    snapshot_time: f64,
) -> Result<VirtualTopology> {
    let n = vues.len();
    let mut graph = Graph::new(n + 1);
    for (i, vue) in vues.iter().enumerate() {
        let Some((bs, dist)) = vue.v2i else { continue };
        let s = &vue.state;
        if s.position.distance(bs) > params.d_i || !(dist.mu > params.gamma_th) {
            continue;
        }
        let kin = RelativeKinematics::from_states(s.position, s.velocity, bs, Vec2::ZERO, params.d_i);
        graph.add_edge(i, n, edge(dist.mu, &kin, params)?)?;
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&vues[i].state, &vues[j].state);
            if !(a.position.distance(b.position) < params.d_v) {
                continue;
            }
            let dist = v2v.v2v_strength(a, b)?;
            if !(dist.mu > params.gamma_th) {
                continue;
            }
            let kin = RelativeKinematics::from_states(a.position, a.velocity, b.position, b.velocity, params.d_v);
            graph.add_edge(i, j, edge(dist.mu, &kin, params)?)?;
        }
    }
    Ok(VirtualTopology {
        graph,
        vehicles: vues.iter().map(|v| v.state.id).collect(),
        snapshot_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::VehicleClass;
    use std::cell::Cell;

    fn d(mu: f64, var: f64) -> StrengthDistribution {
        StrengthDistribution { mu, var }
    }

    fn vue(id: u32, x: f64, y: f64, v2i: Option<(Vec2, StrengthDistribution)>) -> PredictedVue {
        PredictedVue {
            state: VehicleState {
                id,
                position: Vec2::new(x, y),
                velocity: Vec2::new(10.0, 0.0),
                antenna_height: 1.6,
                vclass: VehicleClass::Passenger,
            },
            v2i,
        }
    }

    #[test]
    fn warning_rule() {
        let bs = Vec2::ZERO;
        let w = check_warning(1, d(-75.0, 36.0), Vec2::new(100.0, 0.0), bs, -80.0, 400.0);
        assert!(w.triggered);
        assert_eq!(w.cause, WarningCause::LowStrength);
        let w = check_warning(1, d(-70.0, 25.0), Vec2::new(100.0, 0.0), bs, -80.0, 400.0);
        assert!(!w.triggered);
        assert_eq!(w.cause, WarningCause::None);
        let w = check_warning(1, d(-60.0, 1.0), Vec2::new(410.0, 0.0), bs, -80.0, 400.0);
        assert_eq!(w.cause, WarningCause::OutOfCoverage);
        // Both hold: coverage wins.
        let w = check_warning(1, d(-90.0, 1.0), Vec2::new(410.0, 0.0), bs, -80.0, 400.0);
        assert_eq!(w.cause, WarningCause::OutOfCoverage);
    }

    #[test]
    fn warning_ratio() {
        let truth = [-85.0, -90.0, -70.0, -80.0];
        assert_eq!(successful_warning_ratio(&[true, true, false, true], &truth, -80.0).unwrap(), Some(100.0));
        assert_eq!(successful_warning_ratio(&[false; 4], &truth, -80.0).unwrap(), Some(0.0));
        assert_eq!(successful_warning_ratio(&[false; 4], &truth, -95.0).unwrap(), None);
        assert!(successful_warning_ratio(&[true], &truth, -80.0).is_err());
    }

    #[test]
    fn far_pairs_never_reach_the_model() {
        let calls = Cell::new(0);
        let model = |_: &VehicleState, _: &VehicleState| {
            calls.set(calls.get() + 1);
            Ok(d(-20.0, 1.0))
        };
        let vues = [vue(1, 0.0, 0.0, None), vue(2, 500.0, 0.0, None)];
        let topo = build_virtual_topology(&vues, &model, &TopologyParams::default(), 1.0).unwrap();
        assert_eq!(calls.get(), 0);
        assert_eq!(topo.graph.edge_count(), 0);
    }

    #[test]
    fn admission_is_strict() {
        let bs = Vec2::new(0.0, 50.0);
        let model = |_: &VehicleState, _: &VehicleState| Ok(d(-80.0, 1.0));
        let vues = [vue(1, 0.0, 0.0, Some((bs, d(-80.0, 1.0)))), vue(2, 100.0, 0.0, None)];
        let topo = build_virtual_topology(&vues, &model, &TopologyParams::default(), 1.0).unwrap();
        assert_eq!(topo.graph.edge_count(), 0);
        assert_eq!(topo.graph.degree(topo.node_of(2).unwrap()), 0);
        assert_eq!(topo.graph.node_count(), 3);
    }

    #[test]
    fn warned_vue_keeps_its_edge() {
        let bs = Vec2::new(0.0, 50.0);
        let dist = d(-75.0, 36.0);
        let w = check_warning(1, dist, Vec2::ZERO, bs, -80.0, 400.0);
        assert!(w.triggered);
        let model = |_: &VehicleState, _: &VehicleState| Ok(d(-50.0, 1.0));
        let vues = [vue(1, 0.0, 0.0, Some((bs, dist))), vue(2, 100.0, 0.0, None)];
        let topo = build_virtual_topology(&vues, &model, &TopologyParams::default(), 1.0).unwrap();
        let e = topo.graph.edge(0, topo.bs_node()).unwrap();
        assert!((e.strength - 5.0 / 70.0).abs() < 1e-12);
        // Same velocity: static pair, full connectivity.
        assert_eq!(topo.graph.edge(0, 1).unwrap().connectivity, 1.0);
        assert!(topo.dump().contains("# node 2=BS"));
        let g = Graph::read_edge_list(&topo.dump(), "dump").unwrap();
        assert_eq!(g, topo.graph);
    }

    #[test]
    fn strength_clamped_at_gamma_max() {
        let bs = Vec2::new(0.0, 10.0);
        let model = |_: &VehicleState, _: &VehicleState| Ok(d(-5.0, 1.0));
        let vues = [vue(1, 0.0, 0.0, Some((bs, d(-3.0, 1.0)))), vue(2, 5.0, 0.0, None)];
        let topo = build_virtual_topology(&vues, &model, &TopologyParams::default(), 1.0).unwrap();
        assert_eq!(topo.graph.edge(0, 2).unwrap().strength, 1.0);
        assert_eq!(topo.graph.edge(0, 1).unwrap().strength, 1.0);
    }
}
