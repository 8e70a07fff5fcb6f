//! Heteroscedastic V2I-like benchmark with known noise per density level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{LinkEnd, LinkRecord, LinkType};
use crate::geometry::Vec2;
use crate::scenario::{DensityLevel, VehicleClass};

/// Site every synthetic link is measured against.
pub const SITE: Vec2 = Vec2 { x: 174.0, y: 232.0 };

/// Noise-free mean RSS of a synthetic link.
pub fn mean_rss(position: Vec2, height: f64, speed: f64) -> f64 {
    let d = (position.distance(SITE).powi(2) + (5.0 - height).powi(2)).sqrt().max(40.0);
    -30.0 - 22.0 * d.log10() - 0.15 * speed + 1.5 * (height - 1.6)
}

/// `n` records with uniform positions over a 696 m square and Gaussian
/// noise of standard deviation `sigma[level]`.
pub fn generate(n: usize, sigma: [f64; 3], seed: u64) -> Vec<LinkRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let class = if rng.random_bool(0.15) {
                VehicleClass::TruckBus
            } else {
                VehicleClass::Passenger
            };
            let position = Vec2::new(rng.random_range(0.0..696.0), rng.random_range(0.0..696.0));
            let speed = rng.random_range(0.0..14.0);
            let level = DensityLevel::ALL[rng.random_range(0..3)];
            let z: f64 = rng.sample(StandardNormal);
            let rss = (mean_rss(position, class.antenna_height(), speed) + sigma[level.index()] * z).min(-10.0);
            LinkRecord {
                link_type: LinkType::V2I,
                tx: LinkEnd {
                    id: i as u32,
                    position,
                    height: class.antenna_height(),
                    speed,
                },
                rx: LinkEnd {
                    id: 0,
                    position: SITE,
                    height: 5.0,
                    speed: 0.0,
                },
                rss,
                density: level,
            }
        })
        .collect()
}
