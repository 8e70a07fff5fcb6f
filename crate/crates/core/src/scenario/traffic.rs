//! Seeded microscopic traffic on the grid map.
//!
//! Every road carries one lane per direction (right-hand traffic, lane centre
//! a quarter road width off the centre line). Vehicles enter at the map
//! boundary, drive at a desired speed with linear braking towards the leader,
//! and pick straight/left/right uniformly at each intersection. A turn that
//! would violate the safety gap in the target lane is replaced by going
//! straight.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DensityLevel, Tick, TraceLog, VehicleClass, VehicleState, WorldMap};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    /// Road speed limit, m/s.
    pub speed_limit: f64,
    /// Desired speeds are drawn uniformly from `[factor · limit, limit]`.
    pub min_speed_factor: f64,
    pub truck_fraction: f64,
    /// Minimum bumper-to-bumper gap between consecutive vehicles in a lane.
    pub safety_gap: f64,
    /// Time constant of the linear braking law.
    pub headway_time: f64,
    pub max_accel: f64,
    /// Integration steps per sampling period.
    pub substeps: u32,
    /// Simulated time before the first recorded tick.
    pub warmup: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            speed_limit: 13.9,
            min_speed_factor: 0.7,
            truck_fraction: 0.15,
            safety_gap: 8.0,
            headway_time: 1.5,
            max_accel: 2.0,
            substeps: 10,
            warmup: 120.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Turn {
    Straight,
    Left,
    Right,
}

#[derive(Debug, Clone)]
struct TurnOption {
    trigger_s: f64,
    target_lane: usize,
    entry_s: f64,
}

#[derive(Debug, Clone)]
struct Crossing {
    center_s: f64,
    left: TurnOption,
    right: TurnOption,
}

#[derive(Debug, Clone)]
struct Lane {
    origin: Vec2,
    dir: Vec2,
    length: f64,
    crossings: Vec<Crossing>,
}

impl Lane {
    fn point(&self, s: f64) -> Vec2 {
        self.origin + self.dir * s
    }
}

#[derive(Debug, Clone)]
struct Car {
    id: u32,
    class: VehicleClass,
    lane: usize,
    s: f64,
    speed: f64,
    desired: f64,
    next_crossing: Option<usize>,
    choice: Turn,
}

#[derive(Debug, Clone)]
struct Arrival {
    time: f64,
    lane: usize,
    class: VehicleClass,
    desired: f64,
}

/// Stepping traffic simulator; [`generate_traces`] drives it to a trace.
#[derive(Debug, Clone)]
pub struct TrafficSim {
    config: TrafficConfig,
    lanes: Vec<Lane>,
    road_width: f64,
    cars: Vec<Car>,
    arrivals: VecDeque<Arrival>,
    queues: Vec<VecDeque<Arrival>>,
    rng: ChaCha8Rng,
    time: f64,
    dt: f64,
    next_id: u32,
}

fn build_lanes(map: &WorldMap) -> Vec<Lane> {
    let mut lanes = Vec::with_capacity(map.roads.len() * 2);
    for road in &map.roads {
        let q = road.width / 4.0;
        if road.is_horizontal() {
            let y = road.start.y;
            lanes.push(Lane {
                origin: Vec2::new(road.start.x, y - q),
                dir: Vec2::new(1.0, 0.0),
                length: road.length(),
                crossings: Vec::new(),
            });
            lanes.push(Lane {
                origin: Vec2::new(road.end.x, y + q),
                dir: Vec2::new(-1.0, 0.0),
                length: road.length(),
                crossings: Vec::new(),
            });
        } else {
            let x = road.start.x;
            lanes.push(Lane {
                origin: Vec2::new(x + q, road.start.y),
                dir: Vec2::new(0.0, 1.0),
                length: road.length(),
                crossings: Vec::new(),
            });
            lanes.push(Lane {
                origin: Vec2::new(x - q, road.end.y),
                dir: Vec2::new(0.0, -1.0),
                length: road.length(),
                crossings: Vec::new(),
            });
        }
    }

    let proj = |lane: &Lane, p: Vec2| (p - lane.origin).dot(lane.dir);
    for li in 0..lanes.len() {
        let road_i = li / 2;
        let mut crossings = Vec::new();
        for (road_j, other) in map.roads.iter().enumerate() {
            if other.is_horizontal() == map.roads[road_i].is_horizontal() {
                continue;
            }
            let center = if other.is_horizontal() {
                Vec2::new(lanes[li].origin.x, other.start.y)
            } else {
                Vec2::new(other.start.x, lanes[li].origin.y)
            };
            let mut left = None;
            let mut right = None;
            for target in [2 * road_j, 2 * road_j + 1] {
                let t = &lanes[target];
                // Intersection of the two lane lines.
                let p = if other.is_horizontal() {
                    Vec2::new(lanes[li].origin.x, t.origin.y)
                } else {
                    Vec2::new(t.origin.x, lanes[li].origin.y)
                };
                let opt = TurnOption {
                    trigger_s: proj(&lanes[li], p),
                    target_lane: target,
                    entry_s: proj(t, p),
                };
                if lanes[li].dir.cross(t.dir) > 0.0 {
                    left = Some(opt);
                } else {
                    right = Some(opt);
                }
            }
            crossings.push(Crossing {
                center_s: proj(&lanes[li], center),
                left: left.expect("perpendicular road has a left lane"),
                right: right.expect("perpendicular road has a right lane"),
            });
        }
        crossings.sort_by(|a, b| a.center_s.total_cmp(&b.center_s));
        lanes[li].crossings = crossings;
    }
    lanes
}

impl TrafficSim {
    /// `density` in vehicles per hour per km of road; `period` is the
    /// sampling period τ used to size the integration step.
    pub fn new(
        map: &WorldMap,
        config: TrafficConfig,
        density: f64,
        horizon: f64,
        period: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(density > 0.0) || !density.is_finite() {
            return Err(Error::invalid(format!("density must be positive, got {density}")));
        }
        if !(period > 0.0) {
            return Err(Error::invalid("sampling period must be positive"));
        }
        if map.roads.is_empty() {
            return Err(Error::invalid("map has no roads"));
        }
        let lanes = build_lanes(map);
        let road_width = map.roads[0].width;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rate = density * map.road_km() / 3600.0;
        let start = -config.warmup;
        let mut arrivals = VecDeque::new();
        let mut k = 0u64;
        loop {
            // Stratified arrivals: one per 1/rate window, jittered inside it.
            let time = start + (k as f64 + rng.random::<f64>()) / rate;
            if time > horizon {
                break;
            }
            let lane = rng.random_range(0..lanes.len());
            let class = if rng.random::<f64>() < config.truck_fraction {
                VehicleClass::TruckBus
            } else {
                VehicleClass::Passenger
            };
            let desired = config.speed_limit
                * (config.min_speed_factor + (1.0 - config.min_speed_factor) * rng.random::<f64>());
            arrivals.push_back(Arrival {
                time,
                lane,
                class,
                desired,
            });
            k += 1;
        }
        let dt = period / config.substeps.max(1) as f64;
        let n_lanes = lanes.len();
        Ok(TrafficSim {
            config,
            lanes,
            road_width,
            cars: Vec::new(),
            arrivals,
            queues: vec![VecDeque::new(); n_lanes],
            rng,
            time: start,
            dt,
            next_id: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn vehicle_count(&self) -> usize {
        self.cars.len()
    }

    /// Current states, sorted by id.
    pub fn states(&self) -> Vec<VehicleState> {
        let mut out: Vec<VehicleState> = self
            .cars
            .iter()
            .map(|c| {
                let lane = &self.lanes[c.lane];
                VehicleState {
                    id: c.id,
                    position: lane.point(c.s),
                    velocity: lane.dir * c.speed,
                    antenna_height: c.class.antenna_height(),
                    vclass: c.class,
                }
            })
            .collect();
        out.sort_by_key(|v| v.id);
        out
    }

    /// Smallest bumper-to-bumper gap between consecutive vehicles sharing a
    /// lane, or `None` when no lane holds two vehicles.
    pub fn min_headway_gap(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for lane in 0..self.lanes.len() {
            let order = self.lane_order(lane);
            for w in order.windows(2) {
                let (a, b) = (&self.cars[w[0]], &self.cars[w[1]]);
                let gap = a.s - b.s - (a.class.length() + b.class.length()) / 2.0;
                best = Some(best.map_or(gap, |g: f64| g.min(gap)));
            }
        }
        best
    }

    /// Car indices in `lane`, front-most first.
    fn lane_order(&self, lane: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.cars.len()).filter(|&i| self.cars[i].lane == lane).collect();
        idx.sort_by(|&a, &b| {
            self.cars[b]
                .s
                .total_cmp(&self.cars[a].s)
                .then(self.cars[a].id.cmp(&self.cars[b].id))
        });
        idx
    }

    fn gap_ok(&self, lane: usize, s: f64, class: VehicleClass, skip: Option<usize>) -> bool {
        self.cars.iter().enumerate().all(|(i, c)| {
            if Some(i) == skip || c.lane != lane {
                return true;
            }
            let gap = (c.s - s).abs() - (c.class.length() + class.length()) / 2.0;
            gap >= self.config.safety_gap
        })
    }

    fn draw_turn(&mut self) -> Turn {
        match self.rng.random_range(0..3) {
            0 => Turn::Straight,
            1 => Turn::Left,
            _ => Turn::Right,
        }
    }

    fn first_crossing_after(&self, lane: usize, s: f64) -> Option<usize> {
        self.lanes[lane].crossings.iter().position(|c| c.center_s > s)
    }

    pub fn step(&mut self) {
        let dt = self.dt;
        self.time += dt;

        // Arrivals join their entry lane's queue; queues release when the
        // lane head has room.
        while self.arrivals.front().is_some_and(|a| a.time <= self.time) {
            let a = self.arrivals.pop_front().unwrap();
            self.queues[a.lane].push_back(a);
        }
        for lane in 0..self.lanes.len() {
            let Some(head) = self.queues[lane].front() else {
                continue;
            };
            if !self.gap_ok(lane, 0.0, head.class, None) {
                continue;
            }
            let a = self.queues[lane].pop_front().unwrap();
            let next_crossing = self.first_crossing_after(lane, 0.0);
            let choice = self.draw_turn();
            let id = self.next_id;
            self.next_id += 1;
            self.cars.push(Car {
                id,
                class: a.class,
                lane,
                s: 0.0,
                speed: 0.0,
                desired: a.desired,
                next_crossing,
                choice,
            });
        }

        // Longitudinal update, leaders first so followers see the leader's
        // new position.
        let safety = self.config.safety_gap;
        for lane in 0..self.lanes.len() {
            let order = self.lane_order(lane);
            let mut leader: Option<(f64, f64, f64)> = None; // (old s, new s, length)
            for &i in &order {
                let c = &self.cars[i];
                let mut v = (c.speed + self.config.max_accel * dt).min(c.desired);
                let old_s = c.s;
                if let Some((lead_old, lead_new, lead_len)) = leader {
                    let half = (lead_len + c.class.length()) / 2.0;
                    let gap = lead_old - c.s - half;
                    let v_lin = ((gap - safety) / self.config.headway_time).max(0.0);
                    v = v.min(v_lin);
                    let allowed = lead_new - half - safety;
                    v = v.min(((allowed - c.s) / dt).max(0.0));
                }
                let v = v.max(0.0);
                let c = &mut self.cars[i];
                c.speed = v;
                c.s += v * dt;
                leader = Some((old_s, c.s, c.class.length()));
            }
        }

        // Intersections and exits, in id order for determinism.
        let mut order: Vec<usize> = (0..self.cars.len()).collect();
        order.sort_by_key(|&i| self.cars[i].id);
        let mut exited = Vec::new();
        for i in order {
            loop {
                let car = &self.cars[i];
                let lane = &self.lanes[car.lane];
                let Some(k) = car.next_crossing else { break };
                let crossing = &lane.crossings[k];
                let opt = match car.choice {
                    Turn::Straight => None,
                    Turn::Left => Some(crossing.left.clone()),
                    Turn::Right => Some(crossing.right.clone()),
                };
                let trigger = opt.as_ref().map_or(crossing.center_s, |o| o.trigger_s);
                if car.s < trigger {
                    break;
                }
                let (lane_idx, s_now, class) = (car.lane, car.s, car.class);
                let mut switched = false;
                if let Some(o) = opt {
                    let new_s = o.entry_s + (s_now - o.trigger_s);
                    if new_s < self.lanes[o.target_lane].length
                        && self.gap_ok(o.target_lane, new_s, class, Some(i))
                    {
                        let next = self.first_crossing_after(o.target_lane, o.entry_s + self.road_width / 2.0);
                        let c = &mut self.cars[i];
                        c.lane = o.target_lane;
                        c.s = new_s;
                        c.next_crossing = next;
                        switched = true;
                    }
                }
                if !switched {
                    let next = self.first_crossing_after(lane_idx, crossing.center_s.max(s_now));
                    self.cars[i].next_crossing = next;
                }
                self.cars[i].choice = self.draw_turn();
            }
            if self.cars[i].s > self.lanes[self.cars[i].lane].length {
                exited.push(i);
            }
        }
        exited.sort_unstable();
        for i in exited.into_iter().rev() {
            self.cars.swap_remove(i);
        }
    }
}

/// Seeded traces at `density` vehicles/hour/km of road, sampled every `tau`
/// seconds on `[0, duration]`, with the default traffic configuration.
pub fn generate_traces(
    map: &WorldMap,
    density: f64,
    duration: f64,
    tau: f64,
    seed: u64,
) -> Result<TraceLog> {
    generate_traces_with(map, &TrafficConfig::default(), density, duration, tau, seed)
}

pub fn generate_traces_with(
    map: &WorldMap,
    config: &TrafficConfig,
    density: f64,
    duration: f64,
    tau: f64,
    seed: u64,
) -> Result<TraceLog> {
    if !(tau > 0.0) || !(duration >= tau) {
        return Err(Error::invalid(format!(
            "need duration >= tau > 0, got duration={duration}, tau={tau}"
        )));
    }
    let mut sim = TrafficSim::new(map, config.clone(), density, duration, tau, seed)?;
    let substeps = config.substeps.max(1);
    let warm_steps = (config.warmup / sim.dt()).round() as u64;
    for _ in 0..warm_steps {
        sim.step();
    }
    let n_ticks = (duration / tau).round() as usize + 1;
    let mut ticks = Vec::with_capacity(n_ticks);
    for k in 0..n_ticks {
        if k > 0 {
            for _ in 0..substeps {
                sim.step();
            }
        }
        ticks.push(Tick {
            time: k as f64 * tau,
            vehicles: sim.states(),
        });
    }
    Ok(TraceLog {
        period: tau,
        density_level: DensityLevel::from_rate(density),
        ticks,
    })
}
