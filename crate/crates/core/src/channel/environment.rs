use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{assess_link, ChannelParams, Endpoint};
use crate::error::Result;
use crate::scenario::{associate_bs, VehicleState, WorldMap};

/// Transmit power of a VUE, dBm.
pub const VUE_TX_POWER_DBM: f64 = 23.0;

/// Identity of a radio node for shadowing lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    Vehicle(u32),
    Bs(usize),
}

impl NodeKey {
    fn code(self) -> u64 {
        match self {
            NodeKey::Vehicle(id) => id as u64,
            NodeKey::Bs(i) => (1 << 40) | i as u64,
        }
    }
}

pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ground-truth radio world: the map, channel parameters, and a seed that
/// fixes every shadowing value.
///
/// Shadowing is a function of (link, time): unit normals are drawn at knots
/// spaced by the coherence time and blended between knots with unit
/// variance preserved, so repeated queries agree and nearby instants are
/// correlated.
#[derive(Debug, Clone)]
pub struct RadioEnvironment {
    pub map: WorldMap,
    pub params: ChannelParams,
    pub seed: u64,
}

impl RadioEnvironment {
    pub fn new(map: WorldMap, params: ChannelParams, seed: u64) -> Self {
        RadioEnvironment { map, params, seed }
    }

    fn knot(&self, a: NodeKey, b: NodeKey, k: i64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let h = mix64(mix64(mix64(self.seed ^ lo.code()) ^ hi.code().rotate_left(21)) ^ k as u64);
        ChaCha8Rng::seed_from_u64(h).sample(StandardNormal)
    }

    /// Unit-variance shadowing sample of link (a, b) at `time`.
    pub fn shadowing_z(&self, a: NodeKey, b: NodeKey, time: f64) -> f64 {
        let s = time / self.params.coherence_time;
        let k = s.floor();
        let f = s - k;
        let z0 = self.knot(a, b, k as i64);
        if f < 1e-12 {
            return z0;
        }
        let z1 = self.knot(a, b, k as i64 + 1);
        ((1.0 - f) * z0 + f * z1) / ((1.0 - f).powi(2) + f * f).sqrt()
    }

    pub fn link_rss(
        &self,
        (ka, a): (NodeKey, &Endpoint),
        (kb, b): (NodeKey, &Endpoint),
        tx_power: f64,
        vehicles: &[VehicleState],
        time: f64,
    ) -> Result<f64> {
        let assessment = assess_link(a, b, &self.map, vehicles, &self.params);
        let d = a.distance_3d(b).max(1e-3);
        let z = self.shadowing_z(ka, kb, time);
        self.params
            .rss_with_shadowing(assessment.class, d, tx_power, assessment.blockers, z)
    }

    pub fn bs_endpoint(&self, bs: usize) -> Endpoint {
        let site = &self.map.bs_sites[bs];
        Endpoint {
            position: site.position,
            height: site.antenna_height,
            vehicle: None,
        }
    }

    /// True RSS of the link between vehicle `v` and BS `bs`.
    pub fn v2i_rss(&self, v: &VehicleState, bs: usize, vehicles: &[VehicleState], time: f64) -> Result<f64> {
        let tx = self.map.bs_sites[bs].tx_power_dbm;
        self.link_rss(
            (NodeKey::Vehicle(v.id), &Endpoint::vehicle(v)),
            (NodeKey::Bs(bs), &self.bs_endpoint(bs)),
            tx,
            vehicles,
            time,
        )
    }

    pub fn v2v_rss(&self, a: &VehicleState, b: &VehicleState, vehicles: &[VehicleState], time: f64) -> Result<f64> {
        self.link_rss(
            (NodeKey::Vehicle(a.id), &Endpoint::vehicle(a)),
            (NodeKey::Vehicle(b.id), &Endpoint::vehicle(b)),
            VUE_TX_POWER_DBM,
            vehicles,
            time,
        )
    }

    /// Serving BS of `v` (strongest within `coverage`) and its RSS.
    pub fn serving_bs(
        &self,
        v: &VehicleState,
        vehicles: &[VehicleState],
        time: f64,
        coverage: f64,
    ) -> Result<Option<(usize, f64)>> {
        let rss = (0..self.map.bs_sites.len())
            .map(|i| self.v2i_rss(v, i, vehicles, time))
            .collect::<Result<Vec<_>>>()?;
        Ok(associate_bs(v, &self.map, &rss, coverage)?.map(|i| (i, rss[i])))
    }
}
