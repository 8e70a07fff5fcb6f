//! Trace file: an optional `# rope-trace` metadata line, a header
//! `t,id,x,y,vx,vy,h,class`, then one row per (tick, vehicle).
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! export followed by import reproduces the log bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{DensityLevel, Tick, TraceLog, VehicleState};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

const HEADER: &str = "t,id,x,y,vx,vy,h,class";
const FIELDS: usize = 8;

pub fn write_traces(log: &TraceLog) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# rope-trace v1 period={} density={} ticks={} start={}",
        log.period,
        log.density_level,
        log.ticks.len(),
        log.start_time()
    );
    out.push_str(HEADER);
    out.push('\n');
    for tick in &log.ticks {
        for v in &tick.vehicles {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                tick.time,
                v.id,
                v.position.x,
                v.position.y,
                v.velocity.x,
                v.velocity.y,
                v.antenna_height,
                v.vclass
            );
        }
    }
    out
}

struct Meta {
    period: f64,
    density: DensityLevel,
    ticks: usize,
    start: f64,
}

fn parse_meta(line: &str, source: &str, line_no: usize) -> Result<Option<Meta>> {
    let Some(rest) = line.strip_prefix("# rope-trace v1") else {
        return Ok(None);
    };
    let mut period = None;
    let mut density = None;
    let mut ticks = None;
    let mut start = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(source, line_no, format!("bad metadata `{kv}`")))?;
        let bad = || Error::parse(source, line_no, format!("bad metadata value `{kv}`"));
        match k {
            "period" => period = Some(v.parse::<f64>().map_err(|_| bad())?),
            "density" => density = Some(v.parse::<DensityLevel>().map_err(|_| bad())?),
            "ticks" => ticks = Some(v.parse::<usize>().map_err(|_| bad())?),
            "start" => start = Some(v.parse::<f64>().map_err(|_| bad())?),
            _ => {}
        }
    }
    match (period, density, ticks, start) {
        (Some(period), Some(density), Some(ticks), Some(start)) => Ok(Some(Meta {
            period,
            density,
            ticks,
            start,
        })),
        _ => Err(Error::parse(source, line_no, "incomplete trace metadata")),
    }
}

pub fn read_traces(text: &str, source: &str) -> Result<TraceLog> {
    let mut meta = None;
    let mut rows: Vec<(f64, VehicleState)> = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(m) = parse_meta(line, source, line_no)? {
                meta = Some(m);
            }
            continue;
        }
        if !seen_header && line == HEADER {
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != FIELDS {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected {FIELDS} fields, found {}", fields.len()),
            ));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .parse::<f64>()
                .map_err(|_| Error::parse(source, line_no, format!("bad number `{}`", fields[j])))
        };
        let id = fields[1]
            .parse::<u32>()
            .map_err(|_| Error::parse(source, line_no, format!("bad vehicle id `{}`", fields[1])))?;
        let vclass = fields[7]
            .parse()
            .map_err(|e: Error| Error::parse(source, line_no, e.to_string()))?;
        rows.push((
            num(0)?,
            VehicleState {
                id,
                position: Vec2::new(num(2)?, num(3)?),
                velocity: Vec2::new(num(4)?, num(5)?),
                antenna_height: num(6)?,
                vclass,
            },
        ));
    }

    let mut ticks: Vec<Tick> = Vec::new();
    for (t, v) in rows {
        match ticks.last_mut() {
            Some(last) if last.time == t => last.vehicles.push(v),
            _ => ticks.push(Tick {
                time: t,
                vehicles: vec![v],
            }),
        }
    }
    for tick in &mut ticks {
        tick.vehicles.sort_by_key(|v| v.id);
    }

    let Some(meta) = meta else {
        let period = match ticks.as_slice() {
            [a, b, ..] => b.time - a.time,
            _ => 1.0,
        };
        return Ok(TraceLog {
            period,
            density_level: DensityLevel::Low,
            ticks,
        });
    };

    // Re-insert ticks that had no vehicles and therefore no rows.
    let mut full = Vec::with_capacity(meta.ticks);
    let mut it = ticks.into_iter().peekable();
    for k in 0..meta.ticks {
        let expected = meta.start + k as f64 * meta.period;
        match it.peek() {
            Some(t) if (t.time - expected).abs() < 1e-6 * meta.period.max(1.0) => {
                full.push(it.next().unwrap())
            }
            _ => full.push(Tick {
                time: expected,
                vehicles: Vec::new(),
            }),
        }
    }
    if let Some(extra) = it.next() {
        return Err(Error::parse(
            source,
            0,
            format!("row time {} does not fall on the declared tick grid", extra.time),
        ));
    }
    Ok(TraceLog {
        period: meta.period,
        density_level: meta.density,
        ticks: full,
    })
}

pub fn export_traces(log: &TraceLog, path: &Path) -> Result<()> {
    std::fs::write(path, write_traces(log)).map_err(|e| Error::io(path, e))
}

pub fn import_traces(path: &Path) -> Result<TraceLog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_traces(&text, &path.display().to_string())
}
