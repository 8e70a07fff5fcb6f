use std::cmp::Ordering;
use std::fmt::Write as _;

use super::config::Method;
use super::cycle::{PathRow, WarnRow};
use crate::error::{Error, Result};
use crate::warning::successful_warning_ratio;

/// Aggregates of one (method, density, threshold, replication) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: Method,
    pub density: f64,
    pub gamma_th: f64,
    pub rep: u32,
    /// Mean path strength over measurable active paths, dBm.
    pub p_s: Option<f64>,
    pub p_c: Option<f64>,
    pub p_h: Option<f64>,
    /// Percent of active paths qualified against the ground truth.
    pub p_q: Option<f64>,
    pub warn_ratio: Option<f64>,
    pub gaps: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

fn cell_order(a: (f64, f64, Method, u32), b: (f64, f64, Method, u32)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.cmp(&b.2))
        .then(a.3.cmp(&b.3))
}

/// Cell aggregates, ordered by density, threshold, method, replication.
pub fn summarize(rows: &[PathRow], warns: &[WarnRow], methods: &[Method]) -> Result<Vec<Summary>> {
    let mut cells: Vec<(f64, f64, u32)> = warns.iter().map(|w| (w.density, w.gamma_th, w.rep)).collect();
    cells.extend(rows.iter().map(|r| (r.density, r.gamma_th, r.rep)));
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    cells.dedup();
    let mut out = Vec::new();
    for (density, gamma_th, rep) in cells {
        let same = |d: f64, g: f64, r: u32| d == density && g == gamma_th && r == rep;
        let cw: Vec<&WarnRow> = warns.iter().filter(|w| same(w.density, w.gamma_th, w.rep)).collect();
        let flags: Vec<bool> = cw.iter().map(|w| w.flagged).collect();
        let truth: Vec<f64> = cw.iter().map(|w| w.true_rss.unwrap_or(f64::NEG_INFINITY)).collect();
        let warn_ratio = successful_warning_ratio(&flags, &truth, gamma_th)?;
        for &method in methods {
            let cr: Vec<&PathRow> = rows
                .iter()
                .filter(|r| r.method == method && same(r.density, r.gamma_th, r.rep))
                .collect();
            let active: Vec<&&PathRow> = cr.iter().filter(|r| r.p_h.is_some()).collect();
            let qualified = active.iter().filter(|r| r.qualified).count();
            out.push(Summary {
                method,
                density,
                gamma_th,
                rep,
                p_s: mean(active.iter().filter_map(|r| r.p_s)),
                p_c: mean(active.iter().filter_map(|r| r.p_c)),
                p_h: mean(active.iter().filter_map(|r| r.p_h.map(f64::from))),
                p_q: (!active.is_empty()).then(|| 100.0 * qualified as f64 / active.len() as f64),
                warn_ratio,
                gaps: cr.len() - active.len(),
            });
        }
    }
    out.sort_by(|a, b| {
        cell_order(
            (a.density, a.gamma_th, a.method, a.rep),
            (b.density, b.gamma_th, b.method, b.rep),
        )
    });
    Ok(out)
}

/// Mean of a summary field over replications, `None` when no replication
/// defines it.
pub fn mean_over_reps(
    summaries: &[Summary],
    method: Method,
    density: Option<f64>,
    gamma_th: f64,
    field: impl Fn(&Summary) -> Option<f64>,
) -> Option<f64> {
    mean(
        summaries
            .iter()
            .filter(|s| s.method == method && s.gamma_th == gamma_th && density.is_none_or(|d| d == s.density))
            .filter_map(field),
    )
}

pub const RESULTS_HEADER: &str = "method,density,gamma_th,rep,P_S,P_C,P_H,P_Q,warn_ratio,gaps";
pub const ROWS_HEADER: &str = "method,density,gamma_th,rep,t,vue,warned,outcome,P_S,P_C,P_H,qualified";
pub const WARNS_HEADER: &str = "density,gamma_th,rep,t,vue,flagged,true_rss";
pub const CDF_HEADER: &str = "method,density,gamma_th,P_S,cdf";

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

/// Full-precision variant used by raw rows so aggregates rebuild exactly.
fn opt_exact<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub fn write_results(summaries: &[Summary]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.method,
            s.density,
            s.gamma_th,
            s.rep,
            opt(s.p_s),
            opt(s.p_c),
            opt(s.p_h),
            opt(s.p_q),
            opt(s.warn_ratio),
            s.gaps
        );
    }
    out
}

pub fn write_rows(rows: &[PathRow]) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.density,
            r.gamma_th,
            r.rep,
            r.time,
            r.vue,
            r.warned as u8,
            r.outcome,
            opt_exact(r.p_s),
            opt_exact(r.p_c),
            opt_exact(r.p_h),
            r.qualified as u8
        );
    }
    out
}

pub fn write_warns(warns: &[WarnRow]) -> String {
    let mut out = String::from(WARNS_HEADER);
    out.push('\n');
    for w in warns {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            w.density,
            w.gamma_th,
            w.rep,
            w.time,
            w.vue,
            w.flagged as u8,
            opt_exact(w.true_rss)
        );
    }
    out
}

struct Fields<'a> {
    source: &'a str,
    line: usize,
    f: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn get<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        self.f[i]
            .parse()
            .map_err(|_| Error::parse(self.source, self.line, format!("bad field `{}`", self.f[i])))
    }

    fn opt<T: std::str::FromStr>(&self, i: usize) -> Result<Option<T>> {
        if self.f[i] == "NA" {
            Ok(None)
        } else {
            self.get(i).map(Some)
        }
    }

    fn flag(&self, i: usize) -> Result<bool> {
        match self.f[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::parse(self.source, self.line, format!("bad flag `{other}`"))),
        }
    }
}

fn records<'a>(text: &'a str, source: &'a str, header: &str) -> Result<Vec<Fields<'a>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(Error::parse(source, 1, format!("expected header `{header}`"))),
    }
    let width = header.split(',').count();
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != width {
                return Err(Error::parse(source, i + 1, format!("expected {width} fields, found {}", f.len())));
            }
            Ok(Fields { source, line: i + 1, f })
        })
        .collect()
}

pub fn read_rows(text: &str, source: &str) -> Result<Vec<PathRow>> {
    records(text, source, ROWS_HEADER)?
        .iter()
        .map(|r| {
            Ok(PathRow {
                method: r.get(0)?,
                density: r.get(1)?,
                gamma_th: r.get(2)?,
                rep: r.get(3)?,
                time: r.get(4)?,
                vue: r.get(5)?,
                warned: r.flag(6)?,
                outcome: r.f[7].to_string(),
                p_s: r.opt(8)?,
                p_c: r.opt(9)?,
                p_h: r.opt(10)?,
                qualified: r.flag(11)?,
            })
        })
        .collect()
}

pub fn read_warns(text: &str, source: &str) -> Result<Vec<WarnRow>> {
    records(text, source, WARNS_HEADER)?
        .iter()
        .map(|r| {
            Ok(WarnRow {
                density: r.get(0)?,
                gamma_th: r.get(1)?,
                rep: r.get(2)?,
                time: r.get(3)?,
                vue: r.get(4)?,
                flagged: r.flag(5)?,
                true_rss: r.opt(6)?,
            })
        })
        .collect()
}

/// Empirical CDF of measured path strength per (method, density, threshold),
/// pooled over replications.
pub fn write_cdf(rows: &[PathRow]) -> String {
    let mut groups: Vec<(Method, f64, f64)> = rows.iter().map(|r| (r.method, r.density, r.gamma_th)).collect();
    groups.sort_by(|a, b| cell_order((a.1, a.2, a.0, 0), (b.1, b.2, b.0, 0)));
    groups.dedup();
    let mut out = String::from(CDF_HEADER);
    out.push('\n');
    for (m, d, g) in groups {
        let mut xs: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == m && r.density == d && r.gamma_th == g)
            .filter_map(|r| r.p_s)
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        for (i, x) in xs.iter().enumerate() {
            let _ = writeln!(out, "{m},{d},{g},{x:.4},{:.6}", (i + 1) as f64 / n);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: Method, p_s: Option<f64>, qualified: bool) -> PathRow {
        PathRow {
            method,
            density: 200.0,
            gamma_th: -80.0,
            rep: 0,
            time: 5.0,
            vue: 1,
            warned: true,
            outcome: if p_s.is_some() { "J1".into() } else { "gap".into() },
            p_s,
            p_c: p_s.map(|_| 1.0),
            p_h: p_s.map(|_| 2),
            qualified,
        }
    }

    fn warn(flagged: bool, rss: Option<f64>) -> WarnRow {
        WarnRow {
            density: 200.0,
            gamma_th: -80.0,
            rep: 0,
            time: 5.0,
            vue: 1,
            flagged,
            true_rss: rss,
        }
    }

    #[test]
    fn single_qualified_path() {
        let s = summarize(&[row(Method::Rope, Some(-65.0), true)], &[], &[Method::Rope]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].p_s, Some(-65.0));
        assert_eq!(s[0].p_q, Some(100.0));
        assert_eq!(s[0].p_h, Some(2.0));
        assert_eq!(s[0].warn_ratio, None);
    }

    #[test]
    fn three_of_four_and_gaps() {
        let mut rows: Vec<PathRow> = (0..3).map(|_| row(Method::Car, Some(-70.0), true)).collect();
        rows.push(row(Method::Car, Some(-90.0), false));
        rows.push(row(Method::Car, None, false));
        let warns = [warn(true, Some(-85.0)), warn(false, None), warn(true, Some(-60.0))];
        let s = summarize(&rows, &warns, &[Method::Car]).unwrap();
        assert_eq!(s[0].p_q, Some(75.0));
        assert_eq!(s[0].gaps, 1);
        assert_eq!(s[0].p_s, Some(-75.0));
        assert_eq!(s[0].warn_ratio, Some(50.0));
    }

    #[test]
    fn raw_rows_rebuild_aggregates_exactly() {
        let mut rows = vec![
            row(Method::Rope, Some(-65.123456789), true),
            row(Method::Rope, Some(-71.0 / 3.0), false),
            row(Method::Rope, None, false),
        ];
        rows[1].p_c = Some(0.1 + 0.2);
        let warns = vec![warn(true, Some(-85.5)), warn(false, None)];
        let back_rows = read_rows(&write_rows(&rows), "rows").unwrap();
        let back_warns = read_warns(&write_warns(&warns), "warns").unwrap();
        assert_eq!(back_rows, rows);
        assert_eq!(back_warns, warns);
        let a = summarize(&rows, &warns, &[Method::Rope]).unwrap();
        let b = summarize(&back_rows, &back_warns, &[Method::Rope]).unwrap();
        assert_eq!(a, b);
        assert_eq!(write_results(&a), write_results(&b));
    }

    #[test]
    fn results_csv_layout() {
        let s = summarize(&[row(Method::DirectV2i, None, false)], &[], &[Method::DirectV2i]).unwrap();
        let csv = write_results(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RESULTS_HEADER);
        assert_eq!(lines[1], "D-V2I,200,-80,0,NA,NA,NA,NA,NA,1");
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let rows: Vec<PathRow> = [-70.0, -60.0, -80.0].iter().map(|&x| row(Method::Rope, Some(x), true)).collect();
        let cdf = write_cdf(&rows);
        let lines: Vec<&str> = cdf.lines().skip(1).collect();
        assert_eq!(lines[0], "ROPE,200,-80,-80.0000,0.333333");
        assert_eq!(lines[2], "ROPE,200,-80,-60.0000,1.000000");
    }

    #[test]
    fn malformed_rows_rejected() {
        assert!(read_rows("nope\n", "x").is_err());
        let bad = format!("{ROWS_HEADER}\nROPE,200,-80,0,5,1,1,J1,-70,1,2,7\n");
        assert!(read_rows(&bad, "x").is_err());
    }
}
