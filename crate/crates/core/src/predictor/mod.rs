//! Link-strength prediction: the two-flow network, a KNN point baseline,
//! mobility extrapolation, and a synthetic heteroscedastic benchmark.

mod capnet;
mod knn;
mod mobility;
pub mod synthetic;

pub use capnet::{
    init_theta, loss_and_grad, mean_loss, split_622, train_features, Layout, Objective, PredictorModel, Sample,
    TrainConfig, TrainingReport, VARIANCE_EPS,
};
pub use knn::{knn_predict, KnnModel};
pub use mobility::{extrapolate, predict_mobility, predicted_state, MotionPrediction};

use crate::channel::{LinkEnd, LinkRecord, LinkType};
use crate::error::{Error, Result};
use crate::scenario::DensityLevel;

/// Predicted RSS distribution of one link, dBm and dB².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthDistribution {
    pub mu: f64,
    pub var: f64,
}

impl StrengthDistribution {
    pub fn sigma(&self) -> f64 {
        self.var.sqrt()
    }
}

/// Explicit features `x` and the density one-hot `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub link_type: LinkType,
    pub x: Vec<f64>,
    pub c: [f64; 3],
}

impl FeatureVector {
    /// V2I: transmitter location, antenna height, speed.
    pub fn v2i(tx: &LinkEnd, density: DensityLevel) -> Self {
        FeatureVector {
            link_type: LinkType::V2I,
            x: vec![tx.position.x, tx.position.y, tx.height, tx.speed],
            c: density.one_hot(),
        }
    }

    /// V2V: both endpoints' location and height, then their speed difference.
    pub fn v2v(tx: &LinkEnd, rx: &LinkEnd, density: DensityLevel) -> Self {
        FeatureVector {
            link_type: LinkType::V2V,
            x: vec![
                tx.position.x,
                tx.position.y,
                tx.height,
                rx.position.x,
                rx.position.y,
                rx.height,
                (tx.speed - rx.speed).abs(),
            ],
            c: density.one_hot(),
        }
    }

    pub fn from_record(r: &LinkRecord) -> Self {
        match r.link_type {
            LinkType::V2I => FeatureVector::v2i(&r.tx, r.density),
            LinkType::V2V => FeatureVector::v2v(&r.tx, &r.rx, r.density),
        }
    }
}

/// Trains the network on the records of one link type.
pub fn train_capnet(db: &[LinkRecord], link_type: LinkType, cfg: &TrainConfig) -> Result<(PredictorModel, TrainingReport)> {
    let rows: Vec<&LinkRecord> = db.iter().filter(|r| r.link_type == link_type).collect();
    if rows.is_empty() {
        return Err(Error::invalid(format!("no {link_type} records to train on")));
    }
    let features: Vec<FeatureVector> = rows.iter().map(|r| FeatureVector::from_record(r)).collect();
    let targets: Vec<f64> = rows.iter().map(|r| r.rss).collect();
    train_features(link_type, &features, &targets, cfg)
}

pub fn infer_strength(model: &PredictorModel, f: &FeatureVector) -> Result<StrengthDistribution> {
    model.infer_strength(f)
}
