use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec2};

/// Straight, axis-aligned road with two opposing lanes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub start: Vec2,
    pub end: Vec2,
    pub width: f64,
    pub lanes: u32,
}

impl RoadSegment {
    pub fn is_horizontal(&self) -> bool {
        (self.start.y - self.end.y).abs() < 1e-12
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    /// Paved area of the road.
    pub fn area(&self) -> Rect {
        let h = self.width / 2.0;
        if self.is_horizontal() {
            Rect::new(
                Vec2::new(self.start.x, self.start.y - h),
                Vec2::new(self.end.x, self.end.y + h),
            )
        } else {
            Rect::new(
                Vec2::new(self.start.x - h, self.start.y),
                Vec2::new(self.end.x + h, self.end.y),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsSite {
    pub position: Vec2,
    pub antenna_height: f64,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    /// Width and height of the area; the origin is the lower-left corner.
    pub extent: Vec2,
    pub roads: Vec<RoadSegment>,
    pub buildings: Vec<Rect>,
    pub bs_sites: Vec<BsSite>,
}

/// Arguments of [`generate_map`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapLayout {
    pub blocks_x: u32,
    pub blocks_y: u32,
    pub block_size: f64,
    pub road_width: f64,
    pub bs_count: u32,
    pub seed: u64,
}

impl Default for MapLayout {
    fn default() -> Self {
        MapLayout {
            blocks_x: 4,
            blocks_y: 4,
            block_size: 160.0,
            road_width: 14.0,
            bs_count: 4,
            seed: 1,
        }
    }
}

pub const BS_ANTENNA_HEIGHT: f64 = 5.0;
pub const BS_TX_POWER_DBM: f64 = 24.0;

/// Manhattan-style grid: one road then one building block per period along
/// each axis, so the extent is `blocks · (block_size + road_width)`.
///
/// BSs sit on road corners of the intersections nearest to an evenly spread
/// lattice of target points; the seed picks the corner.
pub fn generate_map(layout: &MapLayout) -> Result<WorldMap> {
    let MapLayout {
        blocks_x,
        blocks_y,
        block_size,
        road_width,
        bs_count,
        seed,
    } = *layout;
    if blocks_x == 0 || blocks_y == 0 || bs_count == 0 {
        return Err(Error::invalid("block and BS counts must be at least 1"));
    }
    if !(road_width > 0.0 && block_size > road_width) || !block_size.is_finite() {
        return Err(Error::invalid(format!(
            "need block_size > road_width > 0, got {block_size} and {road_width}"
        )));
    }
    let pitch = block_size + road_width;
    let extent = Vec2::new(blocks_x as f64 * pitch, blocks_y as f64 * pitch);
    let xs: Vec<f64> = (0..blocks_x).map(|i| road_width / 2.0 + i as f64 * pitch).collect();
    let ys: Vec<f64> = (0..blocks_y).map(|j| road_width / 2.0 + j as f64 * pitch).collect();

    let mut roads = Vec::with_capacity(xs.len() + ys.len());
    for &y in &ys {
        roads.push(RoadSegment {
            start: Vec2::new(0.0, y),
            end: Vec2::new(extent.x, y),
            width: road_width,
            lanes: 2,
        });
    }
    for &x in &xs {
        roads.push(RoadSegment {
            start: Vec2::new(x, 0.0),
            end: Vec2::new(x, extent.y),
            width: road_width,
            lanes: 2,
        });
    }

    let mut buildings = Vec::with_capacity((blocks_x * blocks_y) as usize);
    for i in 0..blocks_x {
        for j in 0..blocks_y {
            let x0 = i as f64 * pitch + road_width;
            let y0 = j as f64 * pitch + road_width;
            buildings.push(Rect::new(
                Vec2::new(x0, y0),
                Vec2::new(x0 + block_size, y0 + block_size),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gx = (bs_count as f64).sqrt().ceil() as u32;
    let gy = bs_count.div_ceil(gx);
    let inset = road_width / 2.0 - 0.5_f64.min(road_width / 4.0);
    let nearest = |lines: &[f64], target: f64| {
        *lines
            .iter()
            .min_by(|a, b| (*a - target).abs().total_cmp(&(*b - target).abs()))
            .unwrap()
    };
    let mut bs_sites = Vec::with_capacity(bs_count as usize);
    for k in 0..bs_count {
        let (i, j) = (k % gx, k / gx);
        let target = Vec2::new(
            (i as f64 + 0.5) / gx as f64 * extent.x,
            (j as f64 + 0.5) / gy as f64 * extent.y,
        );
        let cx = nearest(&xs, target.x);
        let cy = nearest(&ys, target.y);
        let sx = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let sy = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let position = Vec2::new(
            (cx + sx * inset).clamp(0.0, extent.x),
            (cy + sy * inset).clamp(0.0, extent.y),
        );
        bs_sites.push(BsSite {
            position,
            antenna_height: BS_ANTENNA_HEIGHT,
            tx_power_dbm: BS_TX_POWER_DBM,
        });
    }

    let map = WorldMap {
        extent,
        roads,
        buildings,
        bs_sites,
    };
    map.validate()?;
    Ok(map)
}

impl WorldMap {
    pub fn validate(&self) -> Result<()> {
        if !(self.extent.x > 0.0 && self.extent.y > 0.0) {
            return Err(Error::invalid("map extent must be positive"));
        }
        let bounds = Rect::new(Vec2::ZERO, self.extent);
        for bs in &self.bs_sites {
            if !bounds.contains(bs.position) {
                return Err(Error::invalid(format!(
                    "BS at ({}, {}) outside the extent",
                    bs.position.x, bs.position.y
                )));
            }
        }
        for b in &self.buildings {
            if self.roads.iter().any(|r| r.area().overlaps(b)) {
                return Err(Error::invalid("building overlaps a road"));
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(Vec2::ZERO, self.extent)
    }

    pub fn road_km(&self) -> f64 {
        self.roads.iter().map(RoadSegment::length).sum::<f64>() / 1000.0
    }

    pub fn on_road(&self, p: Vec2) -> bool {
        self.roads.iter().any(|r| {
            let a = r.area();
            p.x >= a.min.x - 1e-6 && p.x <= a.max.x + 1e-6 && p.y >= a.min.y - 1e-6 && p.y <= a.max.y + 1e-6
        })
    }

    /// Nearest point on the paved area; identity for points already on a road.
    pub fn snap_to_road(&self, p: Vec2) -> Vec2 {
        self.roads
            .iter()
            .map(|r| r.area().clamp(p))
            .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
            .unwrap_or(p)
    }

    pub fn write_to(&self) -> String {
        let mut out = String::from("# rope-map v1\n");
        let _ = writeln!(out, "extent {} {}", self.extent.x, self.extent.y);
        for r in &self.roads {
            let _ = writeln!(
                out,
                "road {} {} {} {} {} {}",
                r.start.x, r.start.y, r.end.x, r.end.y, r.width, r.lanes
            );
        }
        for b in &self.buildings {
            let _ = writeln!(out, "building {} {} {} {}", b.min.x, b.min.y, b.max.x, b.max.y);
        }
        for s in &self.bs_sites {
            let _ = writeln!(
                out,
                "bs {} {} {} {}",
                s.position.x, s.position.y, s.antenna_height, s.tx_power_dbm
            );
        }
        out
    }

    pub fn parse(text: &str, source_name: &str) -> Result<WorldMap> {
        let mut extent = None;
        let mut roads = Vec::new();
        let mut buildings = Vec::new();
        let mut bs_sites = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap();
            let nums: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| Error::parse(source_name, line_no, format!("bad number `{p}`")))
                })
                .collect::<Result<_>>()?;
            let expect = |n: usize| {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(Error::parse(
                        source_name,
                        line_no,
                        format!("`{kind}` takes {n} values, got {}", nums.len()),
                    ))
                }
            };
            match kind {
                "extent" => {
                    expect(2)?;
                    extent = Some(Vec2::new(nums[0], nums[1]));
                }
                "road" => {
                    expect(6)?;
                    roads.push(RoadSegment {
                        start: Vec2::new(nums[0], nums[1]),
                        end: Vec2::new(nums[2], nums[3]),
                        width: nums[4],
                        lanes: nums[5] as u32,
                    });
                }
                "building" => {
                    expect(4)?;
                    buildings.push(Rect::new(
                        Vec2::new(nums[0], nums[1]),
                        Vec2::new(nums[2], nums[3]),
                    ));
                }
                "bs" => {
                    expect(4)?;
                    bs_sites.push(BsSite {
                        position: Vec2::new(nums[0], nums[1]),
                        antenna_height: nums[2],
                        tx_power_dbm: nums[3],
                    });
                }
                other => {
                    return Err(Error::parse(source_name, line_no, format!("unknown stanza `{other}`")))
                }
            }
        }
        let extent = extent.ok_or_else(|| Error::parse(source_name, 0, "missing `extent` stanza"))?;
        let map = WorldMap {
            extent,
            roads,
            buildings,
            bs_sites,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.write_to()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<WorldMap> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        WorldMap::parse(&text, &path.display().to_string())
    }
}
