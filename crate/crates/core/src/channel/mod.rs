//! Geometry-based ground-truth radio oracle.
//!
//! Links are classified as LOS, NLOSb (a building footprint cuts the 2D
//! segment) or NLOSv (a tall enough vehicle body cuts the ray), then assigned
//! a log-distance path loss with class-specific exponent and log-normal
//! shadowing.

mod database;
mod environment;

pub use database::{
    build_database, load_database, read_database, save_database, write_database, LinkEnd, LinkRecord, LinkType,
};
pub(crate) use environment::mix64;
pub use environment::{NodeKey, RadioEnvironment, VUE_TX_POWER_DBM};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedRect, Vec2};
use crate::scenario::{DensityLevel, VehicleState, WorldMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkClass {
    Los,
    NlosB,
    NlosV,
}

impl LinkClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkClass::Los => "LOS",
            LinkClass::NlosB => "NLOSb",
            LinkClass::NlosV => "NLOSv",
        }
    }
}

/// Path-loss and shadowing parameters. Magnitudes follow common urban V2X
/// measurements; they are configuration, not fitted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub exponent_los: f64,
    pub exponent_nlosv: f64,
    pub exponent_nlosb: f64,
    pub shadowing_los: f64,
    pub shadowing_nlosv: f64,
    pub shadowing_nlosb: f64,
    /// Extra loss of a building-blocked link, dB.
    pub wall_loss: f64,
    /// Loss per blocking vehicle on an NLOSv link, dB.
    pub blocker_loss: f64,
    pub max_blockers: u32,
    /// Free-space loss at the 1 m reference distance (4 GHz carrier).
    pub reference_loss: f64,
    /// Clearance a vehicle body must exceed above the ray to block it.
    pub clearance: f64,
    /// Maximum reportable RSS, dBm.
    pub gamma_max: f64,
    /// Shadowing decorrelation time, seconds.
    pub coherence_time: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            exponent_los: 2.0,
            exponent_nlosv: 2.4,
            exponent_nlosb: 2.8,
            shadowing_los: 2.0,
            shadowing_nlosv: 3.0,
            shadowing_nlosb: 5.0,
            wall_loss: 15.0,
            blocker_loss: 4.0,
            max_blockers: 3,
            reference_loss: 44.48,
            clearance: 0.3,
            gamma_max: -10.0,
            coherence_time: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn exponent(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::Los => self.exponent_los,
            LinkClass::NlosV => self.exponent_nlosv,
            LinkClass::NlosB => self.exponent_nlosb,
        }
    }

    pub fn shadowing_sigma(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::Los => self.shadowing_los,
            LinkClass::NlosV => self.shadowing_nlosv,
            LinkClass::NlosB => self.shadowing_nlosb,
        }
    }

    /// Deterministic part of the received power, before clamping.
    pub fn mean_rss(&self, class: LinkClass, distance_3d: f64, tx_power: f64, n_blockers: u32) -> Result<f64> {
        if !(distance_3d > 0.0) {
            return Err(Error::invalid(format!("link distance must be positive, got {distance_3d}")));
        }
        let mut loss = self.reference_loss + 10.0 * self.exponent(class) * distance_3d.log10();
        match class {
            LinkClass::NlosB => loss += self.wall_loss,
            LinkClass::NlosV => loss += self.blocker_loss * n_blockers.min(self.max_blockers) as f64,
            LinkClass::Los => {}
        }
        Ok(tx_power - loss)
    }

    /// RSS for a given standard-normal shadowing sample `z`.
    pub fn rss_with_shadowing(
        &self,
        class: LinkClass,
        distance_3d: f64,
        tx_power: f64,
        n_blockers: u32,
        z: f64,
    ) -> Result<f64> {
        let mean = self.mean_rss(class, distance_3d, tx_power, n_blockers)?;
        Ok((mean - self.shadowing_sigma(class) * z).min(self.gamma_max))
    }

    /// One ground-truth RSS draw, dBm, clamped to `gamma_max`.
    pub fn ground_truth_rss<R: Rng + ?Sized>(
        &self,
        class: LinkClass,
        distance_3d: f64,
        tx_power: f64,
        n_blockers: u32,
        rng: &mut R,
    ) -> Result<f64> {
        let z: f64 = rng.sample(StandardNormal);
        self.rss_with_shadowing(class, distance_3d, tx_power, n_blockers, z)
    }
}

/// A link endpoint: a vehicle antenna or a BS mast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub position: Vec2,
    pub height: f64,
    /// Vehicle id, so the endpoint's own body is not counted as a blocker.
    pub vehicle: Option<u32>,
}

impl Endpoint {
    pub fn vehicle(v: &VehicleState) -> Self {
        Endpoint {
            position: v.position,
            height: v.antenna_height,
            vehicle: Some(v.id),
        }
    }

    pub fn distance_3d(&self, other: &Endpoint) -> f64 {
        let d2 = self.position.distance(other.position);
        let dh = self.height - other.height;
        (d2 * d2 + dh * dh).sqrt()
    }
}

/// Class and number of blocking vehicles of one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkAssessment {
    pub class: LinkClass,
    pub blockers: u32,
}

pub fn vehicle_outline(v: &VehicleState) -> OrientedRect {
    OrientedRect::new(v.position, v.velocity, v.vclass.length(), v.vclass.width())
}

/// Classifies a link and counts the vehicles blocking it.
///
/// A vehicle blocks when its outline cuts the 2D segment and its body is at
/// least `clearance` above the lowest point of the ray over the cut.
pub fn assess_link(
    a: &Endpoint,
    b: &Endpoint,
    map: &WorldMap,
    vehicles: &[VehicleState],
    params: &ChannelParams,
) -> LinkAssessment {
    if map
        .buildings
        .iter()
        .any(|r| r.clip_segment(a.position, b.position).is_some())
    {
        return LinkAssessment {
            class: LinkClass::NlosB,
            blockers: 0,
        };
    }
    let (lo, hi) = (
        Vec2::new(a.position.x.min(b.position.x), a.position.y.min(b.position.y)),
        Vec2::new(a.position.x.max(b.position.x), a.position.y.max(b.position.y)),
    );
    let mut blockers = 0;
    for v in vehicles {
        if Some(v.id) == a.vehicle || Some(v.id) == b.vehicle {
            continue;
        }
        // Cheap reject: outline radius is at most 5.2 m.
        let reach = 0.5 * v.vclass.length().hypot(v.vclass.width());
        if v.position.x + reach < lo.x
            || v.position.x - reach > hi.x
            || v.position.y + reach < lo.y
            || v.position.y - reach > hi.y
        {
            continue;
        }
        let Some((t0, t1)) = vehicle_outline(v).clip_segment(a.position, b.position) else {
            continue;
        };
        let ray = |t: f64| a.height + (b.height - a.height) * t;
        let lowest = ray(t0).min(ray(t1));
        if v.vclass.body_height() >= lowest + params.clearance {
            blockers += 1;
        }
    }
    LinkAssessment {
        class: if blockers > 0 { LinkClass::NlosV } else { LinkClass::Los },
        blockers,
    }
}

pub fn classify_link(
    a: &Endpoint,
    b: &Endpoint,
    map: &WorldMap,
    vehicles: &[VehicleState],
    params: &ChannelParams,
) -> LinkClass {
    assess_link(a, b, map, vehicles, params).class
}

/// Number of other vehicles strictly closer than `radius`, with the
/// scenario's density level.
pub fn density_context(
    v: &VehicleState,
    vehicles: &[VehicleState],
    radius: f64,
    level: DensityLevel,
) -> Result<(usize, DensityLevel)> {
    if !(radius > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    let count = vehicles
        .iter()
        .filter(|o| o.id != v.id && o.position.distance(v.position) < radius)
        .count();
    Ok((count, level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_map, MapLayout, VehicleClass};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn city() -> WorldMap {
        generate_map(&MapLayout::default()).unwrap()
    }

    fn car(id: u32, x: f64, y: f64, class: VehicleClass) -> VehicleState {
        VehicleState {
            id,
            position: Vec2::new(x, y),
            velocity: Vec2::new(10.0, 0.0),
            antenna_height: class.antenna_height(),
            vclass: class,
        }
    }

    #[test]
    fn building_blocks() {
        let map = city();
        // Diagonal across the first block.
        let a = Endpoint::vehicle(&car(1, 5.0, 5.0, VehicleClass::Passenger));
        let b = Endpoint::vehicle(&car(2, 181.0, 181.0, VehicleClass::Passenger));
        assert_eq!(classify_link(&a, &b, &map, &[], &ChannelParams::default()), LinkClass::NlosB);
    }

    #[test]
    fn open_street_is_los() {
        let map = city();
        let a = Endpoint::vehicle(&car(1, 20.0, 5.0, VehicleClass::Passenger));
        let b = Endpoint::vehicle(&car(2, 300.0, 5.0, VehicleClass::Passenger));
        assert_eq!(classify_link(&a, &b, &map, &[], &ChannelParams::default()), LinkClass::Los);
    }

    #[test]
    fn truck_blocks_passenger_link() {
        let map = city();
        let p = ChannelParams::default();
        let a_car = car(1, 20.0, 5.0, VehicleClass::Passenger);
        let b_car = car(2, 120.0, 5.0, VehicleClass::Passenger);
        let truck = car(3, 70.0, 5.0, VehicleClass::TruckBus);
        let other_car = car(4, 70.0, 5.0, VehicleClass::Passenger);
        let (a, b) = (Endpoint::vehicle(&a_car), Endpoint::vehicle(&b_car));
        let all = [a_car, b_car, truck];
        let got = assess_link(&a, &b, &map, &all, &p);
        assert_eq!(got, LinkAssessment { class: LinkClass::NlosV, blockers: 1 });
        // A passenger body (1.5 m) is below the 1.6 m antennas.
        assert_eq!(classify_link(&a, &b, &map, &[a_car, b_car, other_car], &p), LinkClass::Los);
        // Truck parked beside the segment, not on it.
        let aside = car(5, 70.0, 12.0, VehicleClass::TruckBus);
        assert_eq!(classify_link(&a, &b, &map, &[aside], &p), LinkClass::Los);
    }

    #[test]
    fn truck_blocking_oracle_on_random_layouts() {
        // Independent check: sample points along the segment and test them
        // against the outline rectangle.
        let map = city();
        let p = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let a_car = car(1, rng.random_range(10.0..100.0), 3.5, VehicleClass::Passenger);
            let b_car = car(2, rng.random_range(150.0..300.0), 3.5, VehicleClass::Passenger);
            let mut truck = car(3, rng.random_range(0.0..350.0), rng.random_range(-3.0..10.0), VehicleClass::TruckBus);
            truck.velocity = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let outline = vehicle_outline(&truck);
            let hits = (0..=20000).any(|k| {
                let t = k as f64 / 20000.0;
                let q = a_car.position.lerp(b_car.position, t) - outline.center;
                let n = Vec2::new(-outline.axis.y, outline.axis.x);
                q.dot(outline.axis).abs() < outline.half_length - 1e-3 && q.dot(n).abs() < outline.half_width - 1e-3
            });
            let got = classify_link(&Endpoint::vehicle(&a_car), &Endpoint::vehicle(&b_car), &map, &[truck], &p);
            if hits {
                assert_eq!(got, LinkClass::NlosV);
            }
            if got == LinkClass::Los {
                assert!(!hits);
            }
        }
    }

    #[test]
    fn classification_is_symmetric() {
        let map = city();
        let p = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vehicles: Vec<VehicleState> = (10..40)
            .map(|i| {
                let class = if i % 4 == 0 { VehicleClass::TruckBus } else { VehicleClass::Passenger };
                car(i, rng.random_range(0.0..696.0), 3.5 + 174.0 * rng.random_range(0..4) as f64, class)
            })
            .collect();
        for _ in 0..500 {
            let a = Endpoint {
                position: Vec2::new(rng.random_range(0.0..696.0), rng.random_range(0.0..696.0)),
                height: 1.6,
                vehicle: None,
            };
            let b = Endpoint {
                position: Vec2::new(rng.random_range(0.0..696.0), rng.random_range(0.0..696.0)),
                height: 5.0,
                vehicle: None,
            };
            assert_eq!(
                assess_link(&a, &b, &map, &vehicles, &p),
                assess_link(&b, &a, &map, &vehicles, &p)
            );
        }
    }

    #[test]
    fn doubling_distance_costs_six_db_in_los() {
        let p = ChannelParams::default();
        let near = p.mean_rss(LinkClass::Los, 50.0, 23.0, 0).unwrap();
        let far = p.mean_rss(LinkClass::Los, 100.0, 23.0, 0).unwrap();
        assert!((near - far - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((near - far - 6.0).abs() < 0.05);
    }

    #[test]
    fn nlosb_weaker_than_los() {
        let p = ChannelParams::default();
        for d in [5.0, 50.0, 300.0] {
            let los = p.mean_rss(LinkClass::Los, d, 23.0, 0).unwrap();
            let nlosb = p.mean_rss(LinkClass::NlosB, d, 23.0, 0).unwrap();
            assert!(nlosb < los - 15.0 + 1e-9);
        }
    }

    #[test]
    fn zero_distance_rejected() {
        let p = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(p.ground_truth_rss(LinkClass::Los, 0.0, 23.0, 0, &mut rng).is_err());
    }

    #[test]
    fn shadowing_spread_matches_configuration() {
        let p = ChannelParams::default();
        for class in [LinkClass::Los, LinkClass::NlosV, LinkClass::NlosB] {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            // 30 m keeps every class far below the clamp.
            let draws: Vec<f64> = (0..10_000)
                .map(|_| p.ground_truth_rss(class, 30.0, 23.0, 1, &mut rng).unwrap())
                .collect();
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
            let sigma = p.shadowing_sigma(class);
            assert!((var.sqrt() - sigma).abs() <= 0.1 * sigma, "{class:?}: {}", var.sqrt());
        }
    }

    #[test]
    fn same_stream_same_draw_and_clamped() {
        let p = ChannelParams::default();
        let a = p.ground_truth_rss(LinkClass::Los, 80.0, 23.0, 0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = p.ground_truth_rss(LinkClass::Los, 80.0, 23.0, 0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        let close = p.rss_with_shadowing(LinkClass::Los, 0.01, 23.0, 0, -3.0).unwrap();
        assert_eq!(close, p.gamma_max);
    }

    #[test]
    fn mean_rss_decreases_with_distance_per_class() {
        let p = ChannelParams::default();
        for class in [LinkClass::Los, LinkClass::NlosV, LinkClass::NlosB] {
            let mut prev = f64::INFINITY;
            for d in [20.0, 40.0, 80.0, 160.0, 320.0] {
                let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
                let mean = (0..2000)
                    .map(|_| p.ground_truth_rss(class, d, 23.0, 1, &mut rng).unwrap())
                    .sum::<f64>()
                    / 2000.0;
                assert!(mean < prev);
                prev = mean;
            }
        }
    }

    #[test]
    fn density_context_counts_strictly_inside() {
        let me = car(1, 0.0, 0.0, VehicleClass::Passenger);
        assert_eq!(density_context(&me, &[me], 50.0, DensityLevel::Low).unwrap(), (0, DensityLevel::Low));
        let edge = car(2, 50.0, 0.0, VehicleClass::Passenger);
        let inside = car(3, 49.9, 0.0, VehicleClass::Passenger);
        let (n, _) = density_context(&me, &[me, edge, inside], 50.0, DensityLevel::High).unwrap();
        assert_eq!(n, 1);
        assert!(density_context(&me, &[], 0.0, DensityLevel::Low).is_err());
    }
}
