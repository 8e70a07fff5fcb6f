//! Pre-switchover verification: link checks against the true world, path
//! qualification with a fault set, and mending of two failed paths.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::{link_connectivity, LinkDuration};
use crate::routing::{path_order, Graph, RankTag, RankedPath};

/// True link state between two topology nodes.
pub trait GroundTruth {
    /// Measured RSS, `None` when either node is absent from the world.
    fn rss(&self, u: usize, v: usize, time: f64) -> Option<f64>;
    /// Duration from the true relative kinematics at `time`.
    fn duration(&self, u: usize, v: usize, time: f64) -> Option<LinkDuration>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationParams {
    pub gamma_th: f64,
    pub c_th: f64,
    pub h_th: u32,
    pub tau: f64,
    /// Check offsets before `t + tau`, one per ranked path, decreasing.
    pub deltas: [f64; 3],
}

impl Default for VerificationParams {
    fn default() -> Self {
        VerificationParams {
            gamma_th: -80.0,
            c_th: 0.999,
            h_th: 6,
            tau: 1.0,
            deltas: [0.1, 0.07, 0.04],
        }
    }
}

impl VerificationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::invalid("tau must be positive"));
        }
        for d in self.deltas {
            if !(d > 0.0 && d < self.tau / 2.0) {
                return Err(Error::invalid(format!("check offset {d} outside (0, tau/2)")));
            }
        }
        if !(self.deltas[0] > self.deltas[1] && self.deltas[1] > self.deltas[2]) {
            return Err(Error::invalid("check offsets must be strictly decreasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkCheckReport {
    pub link: (usize, usize),
    pub rss: Option<f64>,
    pub connectivity: f64,
    pub qualified: bool,
}

/// Checks every link of `path` at `check_time`. The duration measured then,
/// minus `delta`, estimates the duration from the activation instant.
pub fn link_check(
    path: &RankedPath,
    world: &dyn GroundTruth,
    check_time: f64,
    delta: f64,
    params: &VerificationParams,
) -> Vec<LinkCheckReport> {
    path.links()
        .map(|(u, v)| {
            let rss = world.rss(u, v, check_time);
            let connectivity = world
                .duration(u, v, check_time)
                .map_or(0.0, |d| link_connectivity(d.minus(delta), params.tau));
            let qualified = matches!(rss, Some(r) if r > params.gamma_th) && connectivity > params.c_th;
            LinkCheckReport {
                link: (u, v),
                rss,
                connectivity,
                qualified,
            }
        })
        .collect()
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Links found unqualified in the current round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaultSet(BTreeSet<(usize, usize)>);

impl FaultSet {
    pub fn insert(&mut self, u: usize, v: usize) {
        self.0.insert(key(u, v));
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.0.contains(&key(u, v))
    }

    pub fn hits(&self, path: &RankedPath) -> bool {
        path.links().any(|(u, v)| self.contains(u, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A path that went through link checking. `sr[i]` holds when every link
/// from the source to `nodes[i]` qualified; `dr[i]` likewise towards the
/// destination.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedPath {
    pub index: usize,
    pub check_time: f64,
    pub reports: Vec<LinkCheckReport>,
    pub sr: Vec<bool>,
    pub dr: Vec<bool>,
}

impl CheckedPath {
    fn new(index: usize, check_time: f64, reports: Vec<LinkCheckReport>) -> Self {
        let m = reports.len();
        let mut sr = vec![true; m + 1];
        let mut dr = vec![true; m + 1];
        for i in 0..m {
            sr[i + 1] = sr[i] && reports[i].qualified;
        }
        for i in (0..m).rev() {
            dr[i] = dr[i + 1] && reports[i].qualified;
        }
        CheckedPath {
            index,
            check_time,
            reports,
            sr,
            dr,
        }
    }

    pub fn qualified(&self) -> bool {
        self.sr.last().copied().unwrap_or(false)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathCheckOutcome {
    /// Index of the first fully qualified path.
    pub selected: Option<usize>,
    pub checked: Vec<CheckedPath>,
    /// Indices skipped because they hit the fault set.
    pub skipped: Vec<usize>,
    pub faults: FaultSet,
}

/// Checks up to three ranked paths in order, path `k` at
/// `t + tau - deltas[k]`, stopping at the first qualified one.
pub fn path_check(
    paths: &[RankedPath],
    world: &dyn GroundTruth,
    t: f64,
    params: &VerificationParams,
) -> Result<PathCheckOutcome> {
    params.validate()?;
    if paths.len() > params.deltas.len() {
        return Err(Error::invalid(format!("at most 3 paths can be verified, got {}", paths.len())));
    }
    let mut out = PathCheckOutcome::default();
    for (k, path) in paths.iter().enumerate() {
        if out.faults.hits(path) {
            out.skipped.push(k);
            continue;
        }
        let delta = params.deltas[k];
        let check_time = t + params.tau - delta;
        let reports = link_check(path, world, check_time, delta, params);
        for r in reports.iter().filter(|r| !r.qualified) {
            out.faults.insert(r.link.0, r.link.1);
        }
        let checked = CheckedPath::new(k, check_time, reports);
        let done = checked.qualified();
        out.checked.push(checked);
        if done {
            out.selected = Some(k);
            break;
        }
    }
    Ok(out)
}

/// Splices the qualified source side of one checked path onto the
/// qualified destination side of another at a shared interior node. The
/// widest simple candidate under the hop bound wins.
pub fn mend_paths(
    g: &Graph,
    paths: &[RankedPath],
    checked: &[CheckedPath],
    params: &VerificationParams,
) -> Result<Option<RankedPath>> {
    if checked.len() < 2 {
        return Ok(None);
    }
    let mut best: Option<RankedPath> = None;
    for e in checked {
        for f in checked {
            if e.index == f.index {
                continue;
            }
            let (pe, pf) = (&paths[e.index].nodes, &paths[f.index].nodes);
            for i in 1..pe.len().saturating_sub(1) {
                if !e.sr[i] {
                    break;
                }
                let Some(j) = pf[1..pf.len() - 1].iter().position(|&x| x == pe[i]).map(|j| j + 1) else {
                    continue;
                };
                if !f.dr[j] {
                    continue;
                }
                let nodes: Vec<usize> = pe[..=i].iter().chain(&pf[j + 1..]).copied().collect();
                if !crate::routing::is_simple(&nodes) || (nodes.len() - 1) as u32 >= params.h_th {
                    continue;
                }
                let cand = RankedPath::from_nodes(g, nodes, RankTag::Mended)?;
                if best.as_ref().is_none_or(|b| path_order(&cand, b).is_lt()) {
                    best = Some(cand);
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Checked(RankedPath),
    Mended(RankedPath),
    Direct,
    Gap,
}

impl Activation {
    pub fn label(&self) -> &'static str {
        match self {
            Activation::Checked(p) => p.rank.as_str(),
            Activation::Mended(_) => "mended",
            Activation::Direct => "direct",
            Activation::Gap => "gap",
        }
    }

    pub fn path(&self) -> Option<&RankedPath> {
        match self {
            Activation::Checked(p) | Activation::Mended(p) => Some(p),
            _ => None,
        }
    }
}

/// Qualified checked path, then mended path, then direct V2I, then nothing.
pub fn select_final(
    paths: &[RankedPath],
    outcome: &PathCheckOutcome,
    mended: Option<RankedPath>,
    direct_available: bool,
) -> Activation {
    if let Some(k) = outcome.selected {
        Activation::Checked(paths[k].clone())
    } else if let Some(m) = mended {
        Activation::Mended(m)
    } else if direct_available {
        Activation::Direct
    } else {
        Activation::Gap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRound {
    pub outcome: PathCheckOutcome,
    pub mended: Option<RankedPath>,
    pub activation: Activation,
}

/// One full round: path check, mending when no path qualified and at least
/// two were checked, then the final choice.
pub fn verify(
    g: &Graph,
    paths: &[RankedPath],
    world: &dyn GroundTruth,
    t: f64,
    params: &VerificationParams,
    direct_available: bool,
) -> Result<VerificationRound> {
    let outcome = path_check(paths, world, t, params)?;
    let mended = if outcome.selected.is_none() {
        mend_paths(g, paths, &outcome.checked, params)?
    } else {
        None
    };
    let activation = select_final(paths, &outcome, mended.clone(), direct_available);
    Ok(VerificationRound {
        outcome,
        mended,
        activation,
    })
}

pub const LOG_HEADER: &str = "t,vue,path_rank,link,rss,conn,qualified";

impl VerificationRound {
    /// Audit rows for every checked link; `label` names topology nodes.
    pub fn log_rows(&self, t: f64, vue: u32, paths: &[RankedPath], label: &dyn Fn(usize) -> String) -> String {
        let mut out = String::new();
        for c in &self.outcome.checked {
            for r in &c.reports {
                let rss = r.rss.map_or_else(|| "absent".to_string(), |x| format!("{x:.4}"));
                let _ = writeln!(
                    out,
                    "{t},{vue},{},{}-{},{rss},{:.6},{}",
                    paths[c.index].rank.as_str(),
                    label(r.link.0),
                    label(r.link.1),
                    r.connectivity,
                    r.qualified as u8
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::EdgeMetrics;
    use std::cell::RefCell;
    use std::collections::BTreeMap;

    /// Table-driven world; unknown links are static and strong.
    #[derive(Default)]
    struct Table {
        rss: BTreeMap<(usize, usize), f64>,
        dur: BTreeMap<(usize, usize), f64>,
        queried: RefCell<Vec<(usize, usize)>>,
    }

    impl Table {
        fn bad(mut self, u: usize, v: usize) -> Self {
            self.rss.insert(key(u, v), -90.0);
            self
        }
    }

    impl GroundTruth for Table {
        fn rss(&self, u: usize, v: usize, _: f64) -> Option<f64> {
            self.queried.borrow_mut().push(key(u, v));
            Some(*self.rss.get(&key(u, v)).unwrap_or(&-60.0))
        }
        fn duration(&self, u: usize, v: usize, _: f64) -> Option<LinkDuration> {
            Some(self.dur.get(&key(u, v)).map_or(LinkDuration::Unbounded, |&d| LinkDuration::Finite(d)))
        }
    }

    fn graph(paths: &[&[usize]]) -> Graph {
        let n = paths.iter().flat_map(|p| p.iter()).max().unwrap() + 1;
        let mut g = Graph::new(n);
        for p in paths {
            for w in p.windows(2) {
                if g.edge(w[0], w[1]).is_none() {
                    g.add_edge(w[0], w[1], EdgeMetrics::new(0.5 + 0.01 * (w[0] + w[1]) as f64, 1.0)).unwrap();
                }
            }
        }
        g
    }

    fn ranked(g: &Graph, paths: &[&[usize]]) -> Vec<RankedPath> {
        paths
            .iter()
            .enumerate()
            .map(|(k, p)| RankedPath::from_nodes(g, p.to_vec(), RankTag::top(k)).unwrap())
            .collect()
    }

    fn params() -> VerificationParams {
        VerificationParams::default()
    }

    #[test]
    fn link_check_boundaries() {
        let g = graph(&[&[0, 1]]);
        let p = RankedPath::from_nodes(&g, vec![0, 1], RankTag::J1).unwrap();
        let mut world = Table::default();
        assert!(link_check(&p, &world, 0.9, 0.1, &params())[0].qualified);
        world.rss.insert((0, 1), -80.0);
        assert!(!link_check(&p, &world, 0.9, 0.1, &params())[0].qualified);
        world.rss.insert((0, 1), -70.0);
        world.dur.insert((0, 1), 1.05);
        let r = &link_check(&p, &world, 0.9, 0.1, &params())[0];
        assert!((r.connectivity - 0.95).abs() < 1e-12);
        assert!(!r.qualified);
    }

    #[test]
    fn first_qualified_path_ends_the_round() {
        let pl: [&[usize]; 3] = [&[0, 1, 9], &[0, 2, 9], &[0, 3, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        let world = Table::default();
        let out = path_check(&paths, &world, 0.0, &params()).unwrap();
        assert_eq!(out.selected, Some(0));
        assert_eq!(out.checked.len(), 1);
        assert_eq!(*world.queried.borrow(), vec![(0, 1), (1, 9)]);
        assert_eq!(out.checked[0].check_time, 0.9);
    }

    #[test]
    fn faulted_path_is_never_checked() {
        let pl: [&[usize]; 3] = [&[0, 1, 2, 9], &[0, 1, 2, 3, 9], &[0, 4, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        let world = Table::default().bad(1, 2);
        let out = path_check(&paths, &world, 0.0, &params()).unwrap();
        assert_eq!(out.skipped, vec![1]);
        assert_eq!(out.selected, Some(2));
        let q = world.queried.borrow();
        assert!(!q.contains(&(2, 3)) && !q.contains(&(3, 9)));
        assert_eq!(out.checked[1].check_time, 1.0 - 0.04);
    }

    #[test]
    fn all_fail_flags_recorded() {
        let pl: [&[usize]; 3] = [&[0, 1, 9], &[0, 2, 9], &[0, 3, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        let world = Table::default().bad(1, 9).bad(0, 2).bad(3, 9);
        let out = path_check(&paths, &world, 0.0, &params()).unwrap();
        assert_eq!(out.selected, None);
        assert_eq!(out.checked.len(), 3);
        assert_eq!(out.checked[0].sr, vec![true, true, false]);
        assert_eq!(out.checked[0].dr, vec![false, false, true]);
        assert_eq!(out.faults.len(), 3);
    }

    // J1 fails outright; J2 fails before the shared node b=5, J3 after it.
    #[test]
    fn mended_from_two_halves() {
        let pl: [&[usize]; 3] = [&[0, 1, 9], &[0, 2, 5, 9], &[0, 4, 5, 6, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        let world = Table::default().bad(1, 9).bad(0, 2).bad(6, 9);
        let round = verify(&g, &paths, &world, 0.0, &params(), true).unwrap();
        assert_eq!(round.outcome.selected, None);
        let m = round.mended.clone().unwrap();
        assert_eq!(m.nodes, vec![0, 4, 5, 9]);
        assert_eq!(m.metrics.hops, 3);
        assert_eq!(round.activation, Activation::Mended(m));
    }

    // Shared node exists but both paths fail on their source side.
    #[test]
    fn unmendable_falls_back_to_direct() {
        let pl: [&[usize]; 3] = [&[0, 1, 9], &[0, 2, 5, 9], &[0, 4, 5, 6, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        let world = Table::default().bad(1, 9).bad(0, 2).bad(0, 4);
        let round = verify(&g, &paths, &world, 0.0, &params(), true).unwrap();
        assert_eq!(round.mended, None);
        assert_eq!(round.activation, Activation::Direct);
        let round = verify(&g, &paths, &world, 0.0, &params(), false).unwrap();
        assert_eq!(round.activation, Activation::Gap);
    }

    #[test]
    fn disjoint_paths_do_not_mend() {
        let pl: [&[usize]; 2] = [&[0, 1, 2, 9], &[0, 3, 4, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        let world = Table::default().bad(2, 9).bad(0, 3);
        let round = verify(&g, &paths, &world, 0.0, &params(), false).unwrap();
        assert_eq!(round.mended, None);
    }

    #[test]
    fn mending_respects_hop_bound() {
        let pl: [&[usize]; 2] = [&[0, 1, 2, 3, 4, 5, 9], &[0, 6, 5, 7, 8, 10, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        // Splice at 5 gives 0-1-2-3-4-5-7-8-10-9 (9 hops) or 0-6-5-9 (3 hops).
        let world = Table::default().bad(5, 9).bad(0, 6);
        let round = verify(&g, &paths, &world, 0.0, &params(), false).unwrap();
        assert_eq!(round.mended, None);
        let world = Table::default().bad(0, 1).bad(8, 10);
        let round = verify(&g, &paths, &world, 0.0, &params(), false).unwrap();
        assert_eq!(round.mended.unwrap().nodes, vec![0, 6, 5, 9]);
    }

    #[test]
    fn selection_order() {
        let pl: [&[usize]; 2] = [&[0, 1, 9], &[0, 2, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        let outcome = PathCheckOutcome {
            selected: Some(1),
            ..Default::default()
        };
        assert_eq!(select_final(&paths, &outcome, None, true), Activation::Checked(paths[1].clone()));
        let none = PathCheckOutcome::default();
        let m = paths[0].clone();
        assert_eq!(select_final(&paths, &none, Some(m.clone()), true), Activation::Mended(m));
        assert_eq!(select_final(&paths, &none, None, false), Activation::Gap);
    }

    #[test]
    fn log_rows_cover_checked_links() {
        let pl: [&[usize]; 2] = [&[0, 1, 9], &[0, 2, 9]];
        let g = graph(&pl);
        let paths = ranked(&g, &pl);
        let world = Table::default().bad(1, 9);
        let round = verify(&g, &paths, &world, 3.0, &params(), true).unwrap();
        let rows = round.log_rows(3.0, 7, &paths, &|n| if n == 9 { "BS".into() } else { format!("v{n}") });
        let lines: Vec<&str> = rows.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "3,7,J1,v1-BS,-90.0000,1.000000,0");
        assert_eq!(lines[3], "3,7,J2,v2-BS,-60.0000,1.000000,1");
    }

    #[test]
    fn offsets_validated() {
        let mut p = params();
        p.deltas = [0.1, 0.1, 0.04];
        assert!(p.validate().is_err());
        p.deltas = [0.6, 0.1, 0.04];
        assert!(p.validate().is_err());
    }
}
