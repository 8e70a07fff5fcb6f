use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::predictor::TrainConfig;
use crate::routing::RoutingParams;
use crate::scenario::{MapLayout, TrafficConfig};
use crate::verification::VerificationParams;
use crate::warning::TopologyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ROPE")]
    Rope,
    /// Top-1 routing without verification.
    #[serde(rename = "ROPE-")]
    RopeMinus,
    #[serde(rename = "CAR")]
    Car,
    #[serde(rename = "D-V2I")]
    DirectV2i,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rope, Method::RopeMinus, Method::Car, Method::DirectV2i];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rope => "ROPE",
            Method::RopeMinus => "ROPE-",
            Method::Car => "CAR",
            Method::DirectV2i => "D-V2I",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// Timing and thresholds of one prediction-routing-verification cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleConfig {
    pub tau: f64,
    /// Past ticks used besides the current one.
    pub history: usize,
    pub deltas: [f64; 3],
    pub c_th: f64,
    pub h_th: u32,
    pub gamma_m: f64,
    pub d_i: f64,
    pub d_v: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            tau: 1.0,
            history: 3,
            deltas: [0.1, 0.07, 0.04],
            c_th: 0.999,
            h_th: 6,
            gamma_m: -10.0,
            d_i: 400.0,
            d_v: 300.0,
        }
    }
}

impl CycleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history < 1 {
            return Err(Error::Config("history must be at least 1".into()));
        }
        self.verification(-80.0).validate()?;
        self.routing(-80.0).validate()
    }

    pub fn routing(&self, gamma_th: f64) -> RoutingParams {
        RoutingParams {
            c_th: self.c_th,
            h_th: self.h_th,
            gamma_th,
            gamma_m: self.gamma_m,
        }
    }

    pub fn verification(&self, gamma_th: f64) -> VerificationParams {
        VerificationParams {
            gamma_th,
            c_th: self.c_th,
            h_th: self.h_th,
            tau: self.tau,
            deltas: self.deltas,
        }
    }

    pub fn topology(&self, gamma_th: f64) -> TopologyParams {
        TopologyParams {
            gamma_th,
            gamma_m: self.gamma_m,
            d_i: self.d_i,
            d_v: self.d_v,
            tau: self.tau,
        }
    }

    /// Ticks excluded at the start of every run.
    pub fn warmup_ticks(&self) -> usize {
        self.history + 2
    }
}

/// How the offline link database is produced and the two models trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Simulated seconds of traffic per density level.
    pub db_duration: f64,
    pub max_v2i_rows: usize,
    pub max_v2v_rows: usize,
    pub v2i: TrainConfig,
    pub v2v: TrainConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            db_duration: 300.0,
            max_v2i_rows: 30000,
            max_v2v_rows: 30000,
            v2i: TrainConfig { epochs: 60, ..TrainConfig::default() },
            v2v: TrainConfig { epochs: 40, ..TrainConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub map: MapLayout,
    pub traffic: TrafficConfig,
    pub channel: ChannelParams,
    pub cycle: CycleConfig,
    pub training: TrainingConfig,
    /// Vehicle insertion rates, vehicles per hour per km.
    pub densities: Vec<f64>,
    pub gamma_th: Vec<f64>,
    pub methods: Vec<Method>,
    pub reps: u32,
    /// Simulated seconds per run.
    pub duration: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            map: MapLayout::default(),
            traffic: TrafficConfig::default(),
            channel: ChannelParams::default(),
            cycle: CycleConfig::default(),
            training: TrainingConfig::default(),
            densities: vec![200.0, 400.0, 600.0],
            gamma_th: vec![-85.0, -80.0, -75.0, -70.0],
            methods: Method::ALL.to_vec(),
            reps: 3,
            duration: 300.0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.cycle.validate()?;
        if self.densities.is_empty() || self.gamma_th.is_empty() || self.methods.is_empty() || self.reps == 0 {
            return Err(Error::Config("densities, gamma_th, methods and reps must be non-empty".into()));
        }
        if self.densities.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("densities must be positive".into()));
        }
        let need = (self.cycle.warmup_ticks() + 3) as f64 * self.cycle.tau;
        if self.duration < need {
            return Err(Error::Config(format!("duration must cover at least {need} s")));
        }
        Ok(())
    }

    /// Number of (density, gamma_th, method, rep) cells.
    pub fn cell_count(&self) -> usize {
        self.densities.len() * self.gamma_th.len() * self.methods.len() * self.reps as usize
    }
}

/// Independent stream seed for a purpose and index.
pub fn derive_seed(base: u64, purpose: u64, index: u64) -> u64 {
    use crate::channel::mix64;
    mix64(mix64(base ^ mix64(purpose)) ^ index)
}
