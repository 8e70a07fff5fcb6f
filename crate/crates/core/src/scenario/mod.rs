//! Synthetic urban world: grid map, vehicle traces and BS association.

mod map;
mod trace_io;
mod traffic;

pub use map::{generate_map, BsSite, MapLayout, RoadSegment, WorldMap};
pub use trace_io::{export_traces, import_traces, read_traces, write_traces};
pub use traffic::{generate_traces, generate_traces_with, TrafficConfig, TrafficSim};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Vehicle category; fixes antenna height and outline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleClass {
    Passenger,
    TruckBus,
}

impl VehicleClass {
    pub fn antenna_height(self) -> f64 {
        match self {
            VehicleClass::Passenger => 1.6,
            VehicleClass::TruckBus => 3.1,
        }
    }

    /// Outline length along the heading, meters.
    pub fn length(self) -> f64 {
        match self {
            VehicleClass::Passenger => 4.5,
            VehicleClass::TruckBus => 10.0,
        }
    }

    pub fn width(self) -> f64 {
        match self {
            VehicleClass::Passenger => 1.8,
            VehicleClass::TruckBus => 2.5,
        }
    }

    /// Height of the body as an obstacle to other links.
    pub fn body_height(self) -> f64 {
        match self {
            VehicleClass::Passenger => 1.5,
            VehicleClass::TruckBus => 3.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VehicleClass::Passenger => "passenger",
            VehicleClass::TruckBus => "truck_bus",
        }
    }
}

impl fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VehicleClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "passenger" => Ok(VehicleClass::Passenger),
            "truck_bus" => Ok(VehicleClass::TruckBus),
            other => Err(Error::invalid(format!("unknown vehicle class `{other}`"))),
        }
    }
}

/// One VUE at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    pub antenna_height: f64,
    pub vclass: VehicleClass,
}

impl VehicleState {
    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Traffic density level, attached to every database item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DensityLevel {
    Low,
    Medium,
    High,
}

impl DensityLevel {
    pub const ALL: [DensityLevel; 3] = [DensityLevel::Low, DensityLevel::Medium, DensityLevel::High];

    /// Nominal density in vehicles per hour per km of road.
    pub fn nominal_rate(self) -> f64 {
        match self {
            DensityLevel::Low => 200.0,
            DensityLevel::Medium => 400.0,
            DensityLevel::High => 600.0,
        }
    }

    /// Level whose nominal rate is closest to `rate`.
    pub fn from_rate(rate: f64) -> DensityLevel {
        if rate < 300.0 {
            DensityLevel::Low
        } else if rate < 500.0 {
            DensityLevel::Medium
        } else {
            DensityLevel::High
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut c = [0.0; 3];
        c[self.index()] = 1.0;
        c
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DensityLevel::Low => "low",
            DensityLevel::Medium => "medium",
            DensityLevel::High => "high",
        }
    }
}

impl fmt::Display for DensityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DensityLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(DensityLevel::Low),
            "medium" => Ok(DensityLevel::Medium),
            "high" => Ok(DensityLevel::High),
            other => Err(Error::invalid(format!("unknown density level `{other}`"))),
        }
    }
}

/// All vehicles present at one sampling instant, sorted by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tick {
    pub time: f64,
    pub vehicles: Vec<VehicleState>,
}

impl Tick {
    pub fn get(&self, id: u32) -> Option<&VehicleState> {
        self.vehicles
            .binary_search_by_key(&id, |v| v.id)
            .ok()
            .map(|i| &self.vehicles[i])
    }
}

/// Mobility samples collected every `period` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    pub period: f64,
    pub density_level: DensityLevel,
    pub ticks: Vec<Tick>,
}

impl Default for TraceLog {
    fn default() -> Self {
        TraceLog {
            period: 1.0,
            density_level: DensityLevel::Low,
            ticks: Vec::new(),
        }
    }
}

impl TraceLog {
    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.ticks.first().map_or(0.0, |t| t.time)
    }

    /// Index of the tick sampled at `time`, if `time` falls on the grid.
    pub fn tick_index(&self, time: f64) -> Option<usize> {
        let k = ((time - self.start_time()) / self.period).round();
        if k < 0.0 {
            return None;
        }
        let k = k as usize;
        let tick = self.ticks.get(k)?;
        ((tick.time - time).abs() < 1e-9).then_some(k)
    }

    /// The last `len` states of vehicle `id` ending at tick `k`, oldest first.
    pub fn history(&self, id: u32, k: usize, len: usize) -> Option<Vec<VehicleState>> {
        if len == 0 || k + 1 < len || k >= self.ticks.len() {
            return None;
        }
        (k + 1 - len..=k)
            .map(|i| self.ticks[i].get(id).copied())
            .collect()
    }

    /// True state at an arbitrary time, linearly interpolated between the
    /// enclosing ticks. `None` when the vehicle is absent from either tick.
    pub fn state_at(&self, id: u32, time: f64) -> Option<VehicleState> {
        if self.ticks.is_empty() {
            return None;
        }
        let x = (time - self.start_time()) / self.period;
        if x < -1e-9 {
            return None;
        }
        let lo = x.floor().max(0.0) as usize;
        let frac = x - lo as f64;
        if frac.abs() < 1e-9 {
            return self.ticks.get(lo)?.get(id).copied();
        }
        if (1.0 - frac).abs() < 1e-9 {
            return self.ticks.get(lo + 1)?.get(id).copied();
        }
        let a = self.ticks.get(lo)?.get(id)?;
        let b = self.ticks.get(lo + 1)?.get(id)?;
        Some(VehicleState {
            position: a.position.lerp(b.position, frac),
            velocity: a.velocity.lerp(b.velocity, frac),
            ..*a
        })
    }

    /// Vehicles inserted after the first tick, in vehicles per hour per km of
    /// road.
    pub fn realized_density(&self, road_km: f64) -> f64 {
        if self.ticks.len() < 2 || road_km <= 0.0 {
            return 0.0;
        }
        let first: std::collections::BTreeSet<u32> =
            self.ticks[0].vehicles.iter().map(|v| v.id).collect();
        let max_first = first.iter().next_back().copied();
        let mut seen = std::collections::BTreeSet::new();
        for tick in &self.ticks[1..] {
            for v in &tick.vehicles {
                if !first.contains(&v.id) && max_first.is_none_or(|m| v.id > m) {
                    seen.insert(v.id);
                }
            }
        }
        let hours = (self.ticks.last().unwrap().time - self.ticks[0].time) / 3600.0;
        seen.len() as f64 / hours / road_km
    }

    pub fn mean_vehicle_count(&self) -> f64 {
        if self.ticks.is_empty() {
            return 0.0;
        }
        self.ticks.iter().map(|t| t.vehicles.len()).sum::<usize>() as f64 / self.ticks.len() as f64
    }
}

/// Index of the BS serving `v`: highest RSS among sites within `coverage`
/// meters, lowest index on ties. `None` when no site is in range.
pub fn associate_bs(
    v: &VehicleState,
    map: &WorldMap,
    rss_per_bs: &[f64],
    coverage: f64,
) -> Result<Option<usize>> {
    if map.bs_sites.is_empty() || rss_per_bs.is_empty() {
        return Err(Error::invalid("no base stations to associate with"));
    }
    if rss_per_bs.len() != map.bs_sites.len() {
        return Err(Error::invalid(format!(
            "{} RSS values for {} base stations",
            rss_per_bs.len(),
            map.bs_sites.len()
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, (site, &rss)) in map.bs_sites.iter().zip(rss_per_bs).enumerate() {
        if site.position.distance(v.position) > coverage {
            continue;
        }
        if best.is_none_or(|(_, b)| rss > b) {
            best = Some((i, rss));
        }
    }
    Ok(best.map(|(i, _)| i))
}
