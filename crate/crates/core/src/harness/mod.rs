//! Experiment orchestration: the per-tick cycle, evaluation against the
//! ground truth, and multi-scenario sweeps with baselines.

mod config;
mod cycle;
mod eval;
mod models;
mod world;

pub use config::{derive_seed, CycleConfig, ExperimentConfig, Method, TrainingConfig};
pub use cycle::{
    evaluated_ticks, make_world, measure_path, predict_tick, run_cell, run_cycle, tick_topology, CellOutput,
    PathRow, TickPrediction, WarnRow,
};
pub use eval::{
    mean_over_reps, read_rows, read_warns, summarize, write_cdf, write_results, write_rows, write_warns, Summary,
    CDF_HEADER, RESULTS_HEADER, ROWS_HEADER, WARNS_HEADER,
};
pub use models::{build_training_db, train_models, Models};
pub use world::{LinkSample, Node, TopologyTruth, Truth, World};

pub use crate::warning::successful_warning_ratio;

use rayon::prelude::*;

use crate::error::Result;
use crate::scenario::{generate_map, WorldMap};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<PathRow>,
    pub warns: Vec<WarnRow>,
    pub summaries: Vec<Summary>,
}

/// The map described by the configuration.
pub fn experiment_map(cfg: &ExperimentConfig) -> Result<WorldMap> {
    generate_map(&cfg.map)
}

/// Builds the offline database and trains both models.
pub fn prepare_models(cfg: &ExperimentConfig, map: &WorldMap) -> Result<Models> {
    let db = build_training_db(cfg, map)?;
    Ok(train_models(&db, &cfg.training)?.0)
}

/// Full factorial sweep. Worlds (density x replication) run in parallel;
/// every threshold and method is evaluated inside each world so they share
/// traces and predictions.
pub fn run_experiment(cfg: &ExperimentConfig, map: &WorldMap, models: &Models) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let cells: Vec<(usize, u32)> = (0..cfg.densities.len())
        .flat_map(|d| (0..cfg.reps).map(move |r| (d, r)))
        .collect();
    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&(d, rep)| {
            let world = make_world(cfg, map, d, rep)?;
            let out = run_cell(&world, models, cfg, cfg.densities[d], rep, false)?;
            log::info!("density {} rep {rep}: {} rows", cfg.densities[d], out.rows.len());
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut warns = Vec::new();
    for o in outputs {
        rows.extend(o.rows);
        warns.extend(o.warns);
    }
    let summaries = summarize(&rows, &warns, &cfg.methods)?;
    Ok(ExperimentOutput { rows, warns, summaries })
}
