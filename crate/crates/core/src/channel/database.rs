//! Link database: one row per observed link per collection tick.
//!
//! File layout: header `type,tx_id,rx_id,x_t,y_t,h_t,v_t,x_r,y_r,h_r,v_r,rss,density`,
//! then decimal rows. `v_*` are speed magnitudes. V2I rows put the serving
//! BS in the receiver columns, with its index as `rx_id` and speed 0.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use super::RadioEnvironment;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scenario::{DensityLevel, TraceLog, VehicleState};

const HEADER: &str = "type,tx_id,rx_id,x_t,y_t,h_t,v_t,x_r,y_r,h_r,v_r,rss,density";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkType {
    V2I,
    V2V,
}

impl fmt::Display for LinkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkType::V2I => "V2I",
            LinkType::V2V => "V2V",
        })
    }
}

impl FromStr for LinkType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "V2I" => Ok(LinkType::V2I),
            "V2V" => Ok(LinkType::V2V),
            other => Err(Error::invalid(format!("unknown link type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEnd {
    pub id: u32,
    pub position: Vec2,
    pub height: f64,
    pub speed: f64,
}

impl LinkEnd {
    pub fn vehicle(v: &VehicleState) -> Self {
        LinkEnd {
            id: v.id,
            position: v.position,
            height: v.antenna_height,
            speed: v.speed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRecord {
    pub link_type: LinkType,
    pub tx: LinkEnd,
    pub rx: LinkEnd,
    pub rss: f64,
    pub density: DensityLevel,
}

/// Collects V2I rows (each vehicle to its serving BS) and V2V rows (pairs
/// closer than `d_v`, lower id transmitting) at every tick of `traces`.
pub fn build_database(env: &RadioEnvironment, traces: &TraceLog, d_i: f64, d_v: f64) -> Result<Vec<LinkRecord>> {
    let mut out = Vec::new();
    for tick in &traces.ticks {
        let vs = &tick.vehicles;
        for v in vs {
            if let Some((bs, rss)) = env.serving_bs(v, vs, tick.time, d_i)? {
                let site = &env.map.bs_sites[bs];
                out.push(LinkRecord {
                    link_type: LinkType::V2I,
                    tx: LinkEnd::vehicle(v),
                    rx: LinkEnd {
                        id: bs as u32,
                        position: site.position,
                        height: site.antenna_height,
                        speed: 0.0,
                    },
                    rss,
                    density: traces.density_level,
                });
            }
        }
        for (i, a) in vs.iter().enumerate() {
            for b in &vs[i + 1..] {
                if a.position.distance(b.position) >= d_v {
                    continue;
                }
                out.push(LinkRecord {
                    link_type: LinkType::V2V,
                    tx: LinkEnd::vehicle(a),
                    rx: LinkEnd::vehicle(b),
                    rss: env.v2v_rss(a, b, vs, tick.time)?,
                    density: traces.density_level,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_database(records: &[LinkRecord]) -> String {
    let mut out = String::with_capacity(64 * records.len() + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.link_type,
            r.tx.id,
            r.rx.id,
            r.tx.position.x,
            r.tx.position.y,
            r.tx.height,
            r.tx.speed,
            r.rx.position.x,
            r.rx.position.y,
            r.rx.height,
            r.rx.speed,
            r.rss,
            r.density
        );
    }
    out
}

pub fn read_database(text: &str, source: &str) -> Result<Vec<LinkRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line == HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 13 {
            return Err(Error::parse(source, line_no, format!("expected 13 fields, found {}", f.len())));
        }
        let num = |j: usize| -> Result<f64> {
            f[j].parse::<f64>()
                .map_err(|_| Error::parse(source, line_no, format!("bad number `{}`", f[j])))
        };
        let id = |j: usize| -> Result<u32> {
            f[j].parse::<u32>()
                .map_err(|_| Error::parse(source, line_no, format!("bad id `{}`", f[j])))
        };
        let wrap = |e: Error| Error::parse(source, line_no, e.to_string());
        let rss = num(11)?;
        if !rss.is_finite() {
            return Err(Error::parse(source, line_no, "rss must be finite"));
        }
        out.push(LinkRecord {
            link_type: f[0].parse().map_err(wrap)?,
            tx: LinkEnd {
                id: id(1)?,
                position: Vec2::new(num(3)?, num(4)?),
                height: num(5)?,
                speed: num(6)?,
            },
            rx: LinkEnd {
                id: id(2)?,
                position: Vec2::new(num(7)?, num(8)?),
                height: num(9)?,
                speed: num(10)?,
            },
            rss,
            density: f[12].parse().map_err(wrap)?,
        });
    }
    Ok(out)
}

pub fn save_database(records: &[LinkRecord], path: &Path) -> Result<()> {
    std::fs::write(path, write_database(records)).map_err(|e| Error::io(path, e))
}

pub fn load_database(path: &Path) -> Result<Vec<LinkRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_database(&text, &path.display().to_string())
}
