use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{derive_seed, ExperimentConfig, TrainingConfig};
use crate::channel::{build_database, LinkEnd, LinkRecord, LinkType, RadioEnvironment};
use crate::error::Result;
use crate::predictor::{train_capnet, FeatureVector, PredictorModel, StrengthDistribution, TrainingReport};
use crate::scenario::{generate_traces_with, DensityLevel, VehicleState, WorldMap};

const DB_TRACES: u64 = 11;
const DB_CHANNEL: u64 = 12;
const DB_SAMPLE: u64 = 13;

/// The two trained link-strength models.
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub v2i: PredictorModel,
    pub v2v: PredictorModel,
}

impl Models {
    pub fn v2i_strength(&self, v: &VehicleState, level: DensityLevel) -> Result<StrengthDistribution> {
        self.v2i.infer_strength(&FeatureVector::v2i(&LinkEnd::vehicle(v), level))
    }

    /// The lower id is the transmitter, as in the database.
    pub fn v2v_strength(&self, a: &VehicleState, b: &VehicleState, level: DensityLevel) -> Result<StrengthDistribution> {
        let (tx, rx) = if a.id <= b.id { (a, b) } else { (b, a) };
        self.v2v
            .infer_strength(&FeatureVector::v2v(&LinkEnd::vehicle(tx), &LinkEnd::vehicle(rx), level))
    }

    /// Writes `v2i.model` and `v2v.model` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
        self.v2i.save(&dir.join("v2i.model"))?;
        self.v2v.save(&dir.join("v2v.model"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Models {
            v2i: PredictorModel::load(&dir.join("v2i.model"))?,
            v2v: PredictorModel::load(&dir.join("v2v.model"))?,
        })
    }
}

/// Link records from traffic simulated with seeds disjoint from every
/// evaluation run, one block per density, subsampled to the row caps.
pub fn build_training_db(cfg: &ExperimentConfig, map: &WorldMap) -> Result<Vec<LinkRecord>> {
    let per_level = cfg.densities.len();
    let mut out = Vec::new();
    for (i, &density) in cfg.densities.iter().enumerate() {
        let traces = generate_traces_with(
            map,
            &cfg.traffic,
            density,
            cfg.training.db_duration,
            cfg.cycle.tau,
            derive_seed(cfg.seed, DB_TRACES, i as u64),
        )?;
        let env = RadioEnvironment::new(map.clone(), cfg.channel.clone(), derive_seed(cfg.seed, DB_CHANNEL, i as u64));
        let db = build_database(&env, &traces, cfg.cycle.d_i, cfg.cycle.d_v)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, DB_SAMPLE, i as u64));
        for (lt, cap) in [
            (LinkType::V2I, cfg.training.max_v2i_rows),
            (LinkType::V2V, cfg.training.max_v2v_rows),
        ] {
            let mut idx: Vec<usize> = (0..db.len()).filter(|&j| db[j].link_type == lt).collect();
            idx.shuffle(&mut rng);
            idx.truncate(cap.div_ceil(per_level));
            idx.sort_unstable();
            out.extend(idx.into_iter().map(|j| db[j]));
        }
    }
    Ok(out)
}

pub fn train_models(db: &[LinkRecord], cfg: &TrainingConfig) -> Result<(Models, TrainingReport, TrainingReport)> {
    let (v2i, r_i) = train_capnet(db, LinkType::V2I, &cfg.v2i)?;
    log::info!("V2I model: best epoch {}, test NLL {:.3}", r_i.best_epoch, r_i.test_nll);
    let (v2v, r_v) = train_capnet(db, LinkType::V2V, &cfg.v2v)?;
    log::info!("V2V model: best epoch {}, test NLL {:.3}", r_v.best_epoch, r_v.test_nll);
    Ok((Models { v2i, v2v }, r_i, r_v))
}
