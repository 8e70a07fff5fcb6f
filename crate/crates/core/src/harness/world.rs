use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::channel::RadioEnvironment;
use crate::geometry::Vec2;
use crate::metrics::{link_connectivity, link_duration, LinkDuration, RelativeKinematics};
use crate::scenario::{TraceLog, VehicleState};
use crate::verification::GroundTruth;
use crate::warning::VirtualTopology;

/// One simulated run: mobility traces and the radio environment.
#[derive(Debug, Clone)]
pub struct World {
    pub env: RadioEnvironment,
    pub traces: TraceLog,
}

/// Far end of a link as seen by the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Vehicle(u32),
    /// Any base station; the strongest site in coverage serves.
    Bs,
}

/// True state of one link at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub rss: Option<f64>,
    pub duration: Option<LinkDuration>,
}

impl LinkSample {
    pub fn connectivity(&self, tau: f64) -> f64 {
        self.duration.map_or(0.0, |d| link_connectivity(d, tau))
    }
}

/// Ground-truth queries with snapshots cached per instant.
pub struct Truth<'a> {
    world: &'a World,
    d_i: f64,
    d_v: f64,
    snapshots: RefCell<HashMap<u64, Rc<Vec<VehicleState>>>>,
    samples: RefCell<HashMap<(Node, Node, u64), LinkSample>>,
}

impl<'a> Truth<'a> {
    pub fn new(world: &'a World, d_i: f64, d_v: f64) -> Self {
        Truth {
            world,
            d_i,
            d_v,
            snapshots: RefCell::new(HashMap::new()),
            samples: RefCell::new(HashMap::new()),
        }
    }

    /// Every vehicle present at `time`, interpolated between ticks.
    pub fn vehicles_at(&self, time: f64) -> Rc<Vec<VehicleState>> {
        let key = time.to_bits();
        if let Some(s) = self.snapshots.borrow().get(&key) {
            return s.clone();
        }
        let tr = &self.world.traces;
        let k = ((time - tr.start_time()) / tr.period).floor().max(0.0) as usize;
        let ids = tr.ticks.get(k).map(|t| t.vehicles.iter().map(|v| v.id).collect::<Vec<_>>());
        let snap: Vec<VehicleState> = ids
            .unwrap_or_default()
            .into_iter()
            .filter_map(|id| tr.state_at(id, time))
            .collect();
        let snap = Rc::new(snap);
        self.snapshots.borrow_mut().insert(key, snap.clone());
        snap
    }

    fn state(vehicles: &[VehicleState], id: u32) -> Option<&VehicleState> {
        vehicles
            .binary_search_by_key(&id, |v| v.id)
            .ok()
            .map(|i| &vehicles[i])
    }

    /// Strongest base station within coverage of vehicle `id`.
    pub fn serving(&self, id: u32, time: f64) -> Option<(usize, f64)> {
        let vs = self.vehicles_at(time);
        let v = Self::state(&vs, id)?;
        self.world.env.serving_bs(v, &vs, time, self.d_i).ok().flatten()
    }

    pub fn in_coverage(&self, id: u32, time: f64) -> bool {
        let vs = self.vehicles_at(time);
        Self::state(&vs, id).is_some_and(|v| {
            self.world.env.map.bs_sites.iter().any(|s| s.position.distance(v.position) <= self.d_i)
        })
    }

    fn duration(pa: Vec2, va: Vec2, pb: Vec2, vb: Vec2, range: f64) -> LinkDuration {
        link_duration(&RelativeKinematics::from_states(pa, va, pb, vb, range)).unwrap_or(LinkDuration::Finite(0.0))
    }

    pub fn sample(&self, a: Node, b: Node, time: f64) -> LinkSample {
        let key = (a, b, time.to_bits());
        if let Some(&s) = self.samples.borrow().get(&key) {
            return s;
        }
        let s = self.measure(a, b, time);
        self.samples.borrow_mut().insert(key, s);
        s
    }

    fn measure(&self, a: Node, b: Node, time: f64) -> LinkSample {
        let absent = LinkSample { rss: None, duration: None };
        let vs = self.vehicles_at(time);
        match (a, b) {
            (Node::Vehicle(x), Node::Vehicle(y)) => {
                let (Some(p), Some(q)) = (Self::state(&vs, x), Self::state(&vs, y)) else {
                    return absent;
                };
                LinkSample {
                    rss: self.world.env.v2v_rss(p, q, &vs, time).ok(),
                    duration: Some(Self::duration(p.position, p.velocity, q.position, q.velocity, self.d_v)),
                }
            }
            (Node::Vehicle(x), Node::Bs) | (Node::Bs, Node::Vehicle(x)) => {
                let Some(p) = Self::state(&vs, x) else {
                    return absent;
                };
                let Ok(Some((bs, rss))) = self.world.env.serving_bs(p, &vs, time, self.d_i) else {
                    return absent;
                };
                let site = self.world.env.map.bs_sites[bs].position;
                LinkSample {
                    rss: Some(rss),
                    duration: Some(Self::duration(p.position, p.velocity, site, Vec2::ZERO, self.d_i)),
                }
            }
            (Node::Bs, Node::Bs) => absent,
        }
    }
}

/// [`Truth`] addressed by virtual-topology node indices.
pub struct TopologyTruth<'a, 'b> {
    pub truth: &'b Truth<'a>,
    pub topology: &'b VirtualTopology,
}

impl TopologyTruth<'_, '_> {
    pub fn node(&self, i: usize) -> Node {
        self.topology.vehicle_at(i).map_or(Node::Bs, Node::Vehicle)
    }
}

impl GroundTruth for TopologyTruth<'_, '_> {
    fn rss(&self, u: usize, v: usize, time: f64) -> Option<f64> {
        self.truth.sample(self.node(u), self.node(v), time).rss
    }

    fn duration(&self, u: usize, v: usize, time: f64) -> Option<LinkDuration> {
        self.truth.sample(self.node(u), self.node(v), time).duration
    }
}
