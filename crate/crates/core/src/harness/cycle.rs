use std::collections::HashMap;

use super::config::{derive_seed, CycleConfig, ExperimentConfig, Method};
use super::models::Models;
use super::world::{Node, TopologyTruth, Truth, World};
use crate::channel::RadioEnvironment;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::predictor::{predict_mobility, predicted_state, StrengthDistribution};
use crate::routing::{baseline_car, prune, tora_top3, wfpf, RankedPath};
use crate::scenario::{generate_traces_with, VehicleState, WorldMap};
use crate::verification::{select_final, verify, Activation, PathCheckOutcome, VerificationRound};
use crate::warning::{build_virtual_topology, check_warning, LinkStrengthModel, PredictedVue, VirtualTopology};

const RUN_TRACES: u64 = 21;
const RUN_CHANNEL: u64 = 22;

/// Evaluation of the active path of one vehicle. Vehicles without a warning
/// stay on their direct V2I link under every method.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub method: Method,
    pub density: f64,
    pub gamma_th: f64,
    pub rep: u32,
    pub time: f64,
    pub vue: u32,
    pub warned: bool,
    /// J1/J2/J3, mended, direct or gap.
    pub outcome: String,
    pub p_s: Option<f64>,
    pub p_c: Option<f64>,
    pub p_h: Option<u32>,
    pub qualified: bool,
}

/// Warning decision for one vehicle against its true V2I strength at
/// activation time; `None` strength means no site in coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct WarnRow {
    pub density: f64,
    pub gamma_th: f64,
    pub rep: u32,
    pub time: f64,
    pub vue: u32,
    pub flagged: bool,
    pub true_rss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellOutput {
    pub rows: Vec<PathRow>,
    pub warns: Vec<WarnRow>,
    /// Verification audit rows of the ROPE method, one text per threshold
    /// in configuration order.
    pub logs: Vec<String>,
}

/// Traces and radio environment of run `rep` at one density.
pub fn make_world(cfg: &ExperimentConfig, map: &WorldMap, density_index: usize, rep: u32) -> Result<World> {
    let density = cfg.densities[density_index];
    let idx = density_index as u64 * 1000 + rep as u64;
    let traces = generate_traces_with(
        map,
        &cfg.traffic,
        density,
        cfg.duration,
        cfg.cycle.tau,
        derive_seed(cfg.seed, RUN_TRACES, idx),
    )?;
    let env = RadioEnvironment::new(map.clone(), cfg.channel.clone(), derive_seed(cfg.seed, RUN_CHANNEL, idx));
    Ok(World { env, traces })
}

/// Predictions for tick `k`, shared by every threshold and method.
#[derive(Debug, Clone, PartialEq)]
pub struct TickPrediction {
    pub time: f64,
    pub vues: Vec<PredictedVue>,
    v2v: HashMap<(u32, u32), StrengthDistribution>,
}

impl LinkStrengthModel for TickPrediction {
    fn v2v_strength(&self, a: &VehicleState, b: &VehicleState) -> Result<StrengthDistribution> {
        let key = (a.id.min(b.id), a.id.max(b.id));
        self.v2v
            .get(&key)
            .copied()
            .ok_or_else(|| Error::ContractViolation(format!("no V2V inference for pair {key:?}")))
    }
}

fn nearest_site(map: &WorldMap, p: Vec2) -> Vec2 {
    map.bs_sites
        .iter()
        .map(|s| s.position)
        .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
        .unwrap_or(p)
}

/// Mobility prediction for `t + tau` of every vehicle with a full history,
/// V2I inference towards the nearest site, and V2V inference for every
/// predicted pair inside V2V range.
pub fn predict_tick(world: &World, models: &Models, k: usize, cycle: &CycleConfig) -> Result<TickPrediction> {
    let tr = &world.traces;
    let tick = tr
        .ticks
        .get(k)
        .ok_or_else(|| Error::invalid(format!("tick {k} out of range")))?;
    let level = tr.density_level;
    let mut vues = Vec::with_capacity(tick.vehicles.len());
    for v in &tick.vehicles {
        let Some(hist) = tr.history(v.id, k, cycle.history + 1) else {
            continue;
        };
        let m = predict_mobility(&hist, tr.period, cycle.tau, &world.env.map)?;
        let state = predicted_state(v, &m);
        let dist = models.v2i_strength(&state, level)?;
        vues.push(PredictedVue {
            v2i: Some((nearest_site(&world.env.map, state.position), dist)),
            state,
        });
    }
    let mut v2v = HashMap::new();
    for (i, a) in vues.iter().enumerate() {
        for b in &vues[i + 1..] {
            if a.state.position.distance(b.state.position) < cycle.d_v {
                let key = (a.state.id.min(b.state.id), a.state.id.max(b.state.id));
                v2v.insert(key, models.v2v_strength(&a.state, &b.state, level)?);
            }
        }
    }
    Ok(TickPrediction {
        time: tick.time + cycle.tau,
        vues,
        v2v,
    })
}

/// Predicted virtual topology of tick `k` at one threshold.
pub fn tick_topology(world: &World, models: &Models, k: usize, cycle: &CycleConfig, gamma_th: f64) -> Result<VirtualTopology> {
    let pred = predict_tick(world, models, k, cycle)?;
    build_virtual_topology(&pred.vues, &pred, &cycle.topology(gamma_th), pred.time)
}

/// Ground-truth evaluation of a path over the activation interval: strength
/// and connectivity at `t + tau`; qualification must hold at `t + tau` and
/// at `t + 1.5 tau`.
pub fn measure_path(
    truth: &Truth,
    nodes: &[Node],
    t: f64,
    cycle: &CycleConfig,
    gamma_th: f64,
) -> (Option<f64>, Option<f64>, Option<u32>, bool) {
    let hops = nodes.len().saturating_sub(1) as u32;
    let at = |time: f64| {
        let samples: Vec<_> = nodes.windows(2).map(|w| truth.sample(w[0], w[1], time)).collect();
        let rss = samples
            .iter()
            .map(|s| s.rss)
            .try_fold(f64::INFINITY, |m, r| r.map(|r| m.min(r)));
        let conn = samples.iter().map(|s| s.connectivity(cycle.tau)).fold(1.0, f64::min);
        let ok = rss.is_some_and(|r| r > gamma_th) && conn > cycle.c_th && hops < cycle.h_th;
        (rss, conn, ok)
    };
    let (p_s, p_c, ok_start) = at(t + cycle.tau);
    let (_, _, ok_mid) = at(t + 1.5 * cycle.tau);
    (p_s, Some(p_c), Some(hops), ok_start && ok_mid)
}

/// Indices of ticks that are evaluated: after warm-up, with two ticks of
/// ground truth ahead.
pub fn evaluated_ticks(world: &World, cycle: &CycleConfig) -> std::ops::Range<usize> {
    let n = world.traces.ticks.len();
    cycle.warmup_ticks()..n.saturating_sub(2).max(cycle.warmup_ticks())
}

/// Candidate paths and the verification round that judged them.
type Checked = (Vec<RankedPath>, VerificationRound);

/// Routing and activation for one warned vehicle under one method.
#[allow(clippy::too_many_arguments)]
fn activate(
    method: Method,
    topo: &VirtualTopology,
    s: usize,
    truth: &TopologyTruth,
    t: f64,
    cfg: &CycleConfig,
    gamma_th: f64,
    direct: bool,
) -> Result<(Activation, Option<Checked>)> {
    let d = topo.bs_node();
    let g = &topo.graph;
    let routing = cfg.routing(gamma_th);
    let none = PathCheckOutcome::default();
    let fallback = |p: Option<RankedPath>| match p {
        Some(p) => Activation::Checked(p),
        None => select_final(&[], &none, None, direct),
    };
    Ok(match method {
        Method::Rope => {
            let paths = tora_top3(g, s, d, &routing)?.paths;
            let round = verify(g, &paths, truth, t, &cfg.verification(gamma_th), direct)?;
            (round.activation.clone(), Some((paths, round)))
        }
        Method::RopeMinus => {
            let pruned = prune(g, cfg.c_th, &[s, d]);
            (fallback(wfpf(&pruned.graph, s, d, cfg.h_th)?), None)
        }
        Method::Car => (fallback(baseline_car(g, s, d, &routing)?), None),
        Method::DirectV2i => (fallback(None), None),
    })
}

/// One cycle at tick `k` for every threshold and method.
#[allow(clippy::too_many_arguments)]
pub fn run_cycle(
    world: &World,
    pred: &TickPrediction,
    truth: &Truth,
    k: usize,
    cfg: &ExperimentConfig,
    density: f64,
    rep: u32,
    out: &mut CellOutput,
    keep_log: bool,
) -> Result<()> {
    let cycle = &cfg.cycle;
    let t = world.traces.ticks[k].time;
    let t_act = t + cycle.tau;
    // Vehicles whose true state is known over the whole activation interval.
    let eval: Vec<bool> = pred
        .vues
        .iter()
        .map(|v| world.traces.state_at(v.state.id, t + 2.0 * cycle.tau).is_some())
        .collect();
    let true_v2i: Vec<Option<f64>> = pred
        .vues
        .iter()
        .zip(&eval)
        .map(|(v, &e)| if e { truth.serving(v.state.id, t_act).map(|x| x.1) } else { None })
        .collect();
    if out.logs.len() < cfg.gamma_th.len() {
        out.logs.resize(cfg.gamma_th.len(), String::new());
    }
    for (gi, &gamma_th) in cfg.gamma_th.iter().enumerate() {
        let mut warned = Vec::new();
        for (i, v) in pred.vues.iter().enumerate() {
            let (bs, dist) = v.v2i.expect("every predicted vehicle has a V2I inference");
            let w = check_warning(v.state.id, dist, v.state.position, bs, gamma_th, cycle.d_i);
            if !eval[i] {
                continue;
            }
            out.warns.push(WarnRow {
                density,
                gamma_th,
                rep,
                time: t,
                vue: v.state.id,
                flagged: w.triggered,
                true_rss: true_v2i[i],
            });
            if w.triggered {
                warned.push(i);
            }
        }
        let topo = if warned.is_empty() {
            None
        } else {
            Some(build_virtual_topology(&pred.vues, pred, &cycle.topology(gamma_th), pred.time)?)
        };
        for (i, v) in pred.vues.iter().enumerate() {
            if !eval[i] {
                continue;
            }
            let vue = v.state.id;
            let direct = truth.in_coverage(vue, t_act);
            let is_warned = warned.binary_search(&i).is_ok();
            for &method in &cfg.methods {
                let (act, nodes) = match (&topo, is_warned) {
                    (Some(topo), true) => {
                        let tt = TopologyTruth { truth, topology: topo };
                        let (act, round) = activate(method, topo, i, &tt, t, cycle, gamma_th, direct)?;
                        if keep_log {
                            if let Some((paths, round)) = &round {
                                let label =
                                    |n: usize| topo.vehicle_at(n).map_or_else(|| "BS".to_string(), |v| format!("v{v}"));
                                out.logs[gi].push_str(&round.log_rows(t, vue, paths, &label));
                            }
                        }
                        let nodes = match &act {
                            Activation::Checked(p) | Activation::Mended(p) => {
                                Some(p.nodes.iter().map(|&n| tt.node(n)).collect())
                            }
                            _ => None,
                        };
                        (act, nodes)
                    }
                    _ => (select_final(&[], &PathCheckOutcome::default(), None, direct), None),
                };
                let nodes: Option<Vec<Node>> = match &act {
                    Activation::Direct => Some(vec![Node::Vehicle(vue), Node::Bs]),
                    Activation::Gap => None,
                    _ => nodes,
                };
                let (p_s, p_c, p_h, qualified) = match &nodes {
                    Some(nodes) => measure_path(truth, nodes, t, cycle, gamma_th),
                    None => (None, None, None, false),
                };
                out.rows.push(PathRow {
                    method,
                    density,
                    gamma_th,
                    rep,
                    time: t,
                    vue,
                    warned: is_warned,
                    outcome: act.label().to_string(),
                    p_s,
                    p_c,
                    p_h,
                    qualified,
                });
            }
        }
    }
    Ok(())
}

/// Every evaluated tick of one world.
pub fn run_cell(
    world: &World,
    models: &Models,
    cfg: &ExperimentConfig,
    density: f64,
    rep: u32,
    keep_log: bool,
) -> Result<CellOutput> {
    let mut out = CellOutput::default();
    for k in evaluated_ticks(world, &cfg.cycle) {
        let pred = predict_tick(world, models, k, &cfg.cycle)?;
        let truth = Truth::new(world, cfg.cycle.d_i, cfg.cycle.d_v);
        run_cycle(world, &pred, &truth, k, cfg, density, rep, &mut out, keep_log)?;
    }
    Ok(out)
}
