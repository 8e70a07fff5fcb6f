//! Two-flow heteroscedastic regressor.
//!
//! Mean flow: `x → tanh(64) → tanh(64) → μ`. Variance flow: the second
//! hidden layer concatenated with the density one-hot `c`, then
//! `tanh(32) → softplus → σ²`. Inputs and targets are standardized with
//! training statistics stored in the model; all parameters live in one
//! flat vector.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureVector, StrengthDistribution};
use crate::channel::LinkType;
use crate::error::{Error, Result};

/// Floor added to every predicted variance (standardized units).
pub const VARIANCE_EPS: f64 = 1e-6;
const N_CONTEXT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Gaussian negative log-likelihood on (μ, σ²).
    Nll,
    /// Squared error on μ only; σ² fixed afterwards to the training
    /// residual variance.
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub var_hidden: usize,
    pub seed: u64,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 40,
            batch_size: 16,
            hidden: 64,
            var_hidden: 32,
            seed: 0,
            objective: Objective::Nll,
        }
    }
}

/// Offsets of each parameter block inside θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub inputs: usize,
    pub hidden: usize,
    pub var_hidden: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    w4: usize,
    b4: usize,
    w5: usize,
    b5: usize,
    pub len: usize,
}

impl Layout {
    pub fn new(inputs: usize, hidden: usize, var_hidden: usize) -> Self {
        let z = hidden + N_CONTEXT;
        let w1 = 0;
        let b1 = w1 + hidden * inputs;
        let w2 = b1 + hidden;
        let b2 = w2 + hidden * hidden;
        let w3 = b2 + hidden;
        let b3 = w3 + hidden;
        let w4 = b3 + 1;
        let b4 = w4 + var_hidden * z;
        let w5 = b4 + var_hidden;
        let b5 = w5 + var_hidden;
        Layout {
            inputs,
            hidden,
            var_hidden,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            w4,
            b4,
            w5,
            b5,
            len: b5 + 1,
        }
    }
}

fn softplus(s: f64) -> f64 {
    if s > 30.0 {
        s
    } else {
        s.exp().ln_1p()
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Intermediate activations of one forward pass.
struct Trace {
    h1: Vec<f64>,
    h2: Vec<f64>,
    h4: Vec<f64>,
    s: f64,
    mu: f64,
    var: f64,
}

fn affine_tanh(w: &[f64], b: &[f64], input: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(j, &bj)| {
            let row = &w[j * input.len()..(j + 1) * input.len()];
            (bj + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>()).tanh()
        })
        .collect()
}

fn forward(l: &Layout, theta: &[f64], x: &[f64], c: &[f64; 3]) -> Trace {
    let h = l.hidden;
    let h1 = affine_tanh(&theta[l.w1..l.b1], &theta[l.b1..l.w2], x);
    let h2 = affine_tanh(&theta[l.w2..l.b2], &theta[l.b2..l.w3], &h1);
    let mu = theta[l.b3] + theta[l.w3..l.w3 + h].iter().zip(&h2).map(|(a, b)| a * b).sum::<f64>();
    let mut z = h2.clone();
    z.extend_from_slice(c);
    let h4 = affine_tanh(&theta[l.w4..l.b4], &theta[l.b4..l.w5], &z);
    let s = theta[l.b5] + theta[l.w5..l.b5].iter().zip(&h4).map(|(a, b)| a * b).sum::<f64>();
    Trace {
        h1,
        h2,
        h4,
        s,
        mu,
        var: softplus(s) + VARIANCE_EPS,
    }
}

/// Per-sample loss in standardized units.
fn sample_loss(objective: Objective, t: &Trace, y: f64) -> f64 {
    let r = y - t.mu;
    match objective {
        Objective::Nll => 0.5 * (2.0 * std::f64::consts::PI * t.var).ln() + r * r / (2.0 * t.var),
        Objective::Mse => 0.5 * r * r,
    }
}

/// Adds the gradient of one sample's loss, scaled by `scale`, into `grad`.
#[allow(clippy::too_many_arguments)]
fn backward(l: &Layout, theta: &[f64], x: &[f64], c: &[f64; 3], y: f64, t: &Trace, objective: Objective, scale: f64, grad: &mut [f64]) {
    let h = l.hidden;
    let hv = l.var_hidden;
    let zlen = h + N_CONTEXT;
    let r = y - t.mu;
    let (g_mu, g_s) = match objective {
        Objective::Nll => {
            let g_var = 0.5 / t.var - r * r / (2.0 * t.var * t.var);
            (-r / t.var * scale, g_var * sigmoid(t.s) * scale)
        }
        Objective::Mse => (-r * scale, 0.0),
    };

    let mut g_h2 = vec![0.0; h];
    if g_s != 0.0 {
        grad[l.b5] += g_s;
        for k in 0..hv {
            grad[l.w5 + k] += g_s * t.h4[k];
            let g_a4 = g_s * theta[l.w5 + k] * (1.0 - t.h4[k] * t.h4[k]);
            grad[l.b4 + k] += g_a4;
            let row = l.w4 + k * zlen;
            for j in 0..h {
                grad[row + j] += g_a4 * t.h2[j];
                g_h2[j] += g_a4 * theta[row + j];
            }
            for (m, cm) in c.iter().enumerate() {
                grad[row + h + m] += g_a4 * cm;
            }
        }
    }

    grad[l.b3] += g_mu;
    for j in 0..h {
        grad[l.w3 + j] += g_mu * t.h2[j];
        g_h2[j] += g_mu * theta[l.w3 + j];
    }

    let mut g_h1 = vec![0.0; h];
    for j in 0..h {
        let g_a2 = g_h2[j] * (1.0 - t.h2[j] * t.h2[j]);
        grad[l.b2 + j] += g_a2;
        let row = l.w2 + j * h;
        for i in 0..h {
            grad[row + i] += g_a2 * t.h1[i];
            g_h1[i] += g_a2 * theta[row + i];
        }
    }

    let d = l.inputs;
    for j in 0..h {
        let g_a1 = g_h1[j] * (1.0 - t.h1[j] * t.h1[j]);
        grad[l.b1 + j] += g_a1;
        let row = l.w1 + j * d;
        for i in 0..d {
            grad[row + i] += g_a1 * x[i];
        }
    }
}

/// A training example in standardized units.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub c: [f64; 3],
    pub y: f64,
}

/// Mean loss over `batch` and its gradient with respect to θ.
pub fn loss_and_grad(l: &Layout, theta: &[f64], batch: &[Sample], objective: Objective) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; l.len];
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for s in batch {
        let t = forward(l, theta, &s.x, &s.c);
        loss += sample_loss(objective, &t, s.y) * scale;
        backward(l, theta, &s.x, &s.c, s.y, &t, objective, scale, &mut grad);
    }
    (loss, grad)
}

pub fn mean_loss(l: &Layout, theta: &[f64], batch: &[Sample], objective: Objective) -> f64 {
    batch
        .iter()
        .map(|s| sample_loss(objective, &forward(l, theta, &s.x, &s.c), s.y))
        .sum::<f64>()
        / batch.len().max(1) as f64
}

/// Xavier-uniform weights, zero biases, variance bias at softplus⁻¹(1).
pub fn init_theta(l: &Layout, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = vec![0.0; l.len];
    let mut fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize| {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in &mut theta[range] {
            *v = rng.random_range(-a..a);
        }
    };
    fill(l.w1..l.b1, l.inputs, l.hidden);
    fill(l.w2..l.b2, l.hidden, l.hidden);
    fill(l.w3..l.b3, l.hidden, 1);
    fill(l.w4..l.b4, l.hidden + N_CONTEXT, l.var_hidden);
    fill(l.w5..l.b5, l.var_hidden, 1);
    theta[l.b5] = (std::f64::consts::E - 1.0).ln();
    theta
}

/// A trained model: parameters plus the normalization it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub link_type: LinkType,
    pub layout: Layout,
    pub theta: Vec<f64>,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
    /// Set for models trained on squared error: σ² in standardized units.
    pub fixed_variance: Option<f64>,
}

impl PredictorModel {
    pub fn inputs(&self) -> usize {
        self.layout.inputs
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_mean.iter().zip(&self.x_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn infer_strength(&self, f: &FeatureVector) -> Result<StrengthDistribution> {
        if f.link_type != self.link_type || f.x.len() != self.inputs() {
            return Err(Error::invalid(format!(
                "model takes {} {} features, got {} {}",
                self.inputs(),
                self.link_type,
                f.x.len(),
                f.link_type
            )));
        }
        let t = forward(&self.layout, &self.theta, &self.standardize(&f.x), &f.c);
        let var_n = self.fixed_variance.unwrap_or(t.var);
        Ok(StrengthDistribution {
            mu: t.mu * self.y_std + self.y_mean,
            var: var_n * self.y_std * self.y_std,
        })
    }

    /// Gaussian NLL of `y` (dBm) under the model's prediction for `f`.
    pub fn nll(&self, f: &FeatureVector, y: f64) -> Result<f64> {
        let d = self.infer_strength(f)?;
        Ok(0.5 * (2.0 * std::f64::consts::PI * d.var).ln() + (y - d.mu).powi(2) / (2.0 * d.var))
    }

    pub fn write_to(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let _ = writeln!(out, "rope-capnet v1");
        let _ = writeln!(out, "link_type {}", self.link_type);
        let _ = writeln!(
            out,
            "shape {} {} {}",
            self.layout.inputs, self.layout.hidden, self.layout.var_hidden
        );
        let _ = writeln!(out, "x_mean {}", join(&self.x_mean));
        let _ = writeln!(out, "x_std {}", join(&self.x_std));
        let _ = writeln!(out, "y {:?} {:?}", self.y_mean, self.y_std);
        match self.fixed_variance {
            Some(v) => {
                let _ = writeln!(out, "fixed_variance {v:?}");
            }
            None => {
                let _ = writeln!(out, "fixed_variance none");
            }
        }
        let _ = writeln!(out, "theta {}", self.theta.len());
        for chunk in self.theta.chunks(8) {
            let _ = writeln!(out, "{}", join(chunk));
        }
        out
    }

    pub fn parse(text: &str, source: &str) -> Result<PredictorModel> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
            let (i, l) = lines
                .next()
                .ok_or_else(|| Error::parse(source, 0, format!("missing {what}")))?;
            Ok((i + 1, l.split_whitespace().collect()))
        };
        let floats = |line: usize, v: &[&str]| -> Result<Vec<f64>> {
            v.iter()
                .map(|s| s.parse::<f64>().map_err(|_| Error::parse(source, line, format!("bad number `{s}`"))))
                .collect()
        };
        let keyed = |line: usize, v: &[&str], key: &str| -> Result<()> {
            if v.first() != Some(&key) {
                return Err(Error::parse(source, line, format!("expected `{key}`")));
            }
            Ok(())
        };

        let (i, v) = next("header")?;
        if v != ["rope-capnet", "v1"] {
            return Err(Error::parse(source, i, "not a rope-capnet v1 model"));
        }
        let (i, v) = next("link_type")?;
        keyed(i, &v, "link_type")?;
        let link_type: LinkType = v
            .get(1)
            .ok_or_else(|| Error::parse(source, i, "missing link type"))?
            .parse()
            .map_err(|e: Error| Error::parse(source, i, e.to_string()))?;
        let (i, v) = next("shape")?;
        keyed(i, &v, "shape")?;
        let shape: Vec<usize> = v[1..]
            .iter()
            .map(|s| s.parse().map_err(|_| Error::parse(source, i, "bad shape")))
            .collect::<Result<_>>()?;
        let [inputs, hidden, var_hidden] = shape[..] else {
            return Err(Error::parse(source, i, "shape needs 3 sizes"));
        };
        let layout = Layout::new(inputs, hidden, var_hidden);
        let (i, v) = next("x_mean")?;
        keyed(i, &v, "x_mean")?;
        let x_mean = floats(i, &v[1..])?;
        let (i, v) = next("x_std")?;
        keyed(i, &v, "x_std")?;
        let x_std = floats(i, &v[1..])?;
        if x_mean.len() != inputs || x_std.len() != inputs {
            return Err(Error::parse(source, i, "normalization size does not match inputs"));
        }
        let (i, v) = next("y")?;
        keyed(i, &v, "y")?;
        let y = floats(i, &v[1..])?;
        let [y_mean, y_std] = y[..] else {
            return Err(Error::parse(source, i, "y needs mean and std"));
        };
        let (i, v) = next("fixed_variance")?;
        keyed(i, &v, "fixed_variance")?;
        let fixed_variance = match v.get(1) {
            Some(&"none") => None,
            Some(s) => Some(floats(i, &[s])?[0]),
            None => return Err(Error::parse(source, i, "missing fixed_variance value")),
        };
        let (i, v) = next("theta")?;
        keyed(i, &v, "theta")?;
        let n: usize = v
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(source, i, "bad parameter count"))?;
        if n != layout.len {
            return Err(Error::parse(source, i, format!("{n} parameters, shape needs {}", layout.len)));
        }
        let mut theta = Vec::with_capacity(n);
        while theta.len() < n {
            let (i, v) = next("parameters")?;
            theta.extend(floats(i, &v)?);
        }
        if theta.len() != n {
            return Err(Error::parse(source, 0, "parameter count mismatch"));
        }
        Ok(PredictorModel {
            link_type,
            layout,
            theta,
            x_mean,
            x_std,
            y_mean,
            y_std,
            fixed_variance,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.write_to()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<PredictorModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PredictorModel::parse(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Mean training loss before training (index 0) and after each epoch.
    pub train_loss: Vec<f64>,
    /// Mean validation NLL in dB units, same indexing.
    pub val_nll: Vec<f64>,
    pub best_epoch: usize,
    /// NLL in dB units on the held-out test split.
    pub test_nll: f64,
    /// Set when all targets are (nearly) identical.
    pub degenerate: bool,
    pub sizes: (usize, usize, usize),
}

/// Seeded 6:2:2 split of `0..n` into train, validation and test indices.
pub fn split_622(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5911));
    let n_train = (n * 6).div_ceil(10).max(1).min(n);
    let n_val = ((n * 2) / 10).min(n - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    (idx, val, test)
}

fn column_stats(rows: &[&[f64]], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in std.iter_mut().zip(r.iter()).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    for s in &mut std {
        *s = s.sqrt();
        if *s < 1e-9 {
            *s = 1.0;
        }
    }
    (mean, std)
}

/// Trains on `(features, targets)` with a seeded 6:2:2 split and returns
/// the epoch with the lowest validation NLL.
pub fn train_features(
    link_type: LinkType,
    features: &[FeatureVector],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<(PredictorModel, TrainingReport)> {
    if features.is_empty() || features.len() != targets.len() {
        return Err(Error::invalid("training needs a non-empty, aligned dataset"));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::invalid("epochs, batch size and learning rate must be positive"));
    }
    let inputs = features[0].x.len();
    if features.iter().any(|f| f.x.len() != inputs || f.link_type != link_type) {
        return Err(Error::invalid("mixed feature arity or link type"));
    }
    let (train_idx, val_idx, test_idx) = split_622(features.len(), cfg.seed);

    let train_rows: Vec<&[f64]> = train_idx.iter().map(|&i| features[i].x.as_slice()).collect();
    let (x_mean, x_std) = column_stats(&train_rows, inputs);
    let ys: Vec<f64> = train_idx.iter().map(|&i| targets[i]).collect();
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let y_var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / ys.len() as f64;
    let degenerate = y_var.sqrt() < 1e-6;
    if degenerate {
        log::warn!("training targets are (nearly) constant; predicted variance will collapse toward zero");
    }
    let y_std = if degenerate { 1.0 } else { y_var.sqrt() };

    let layout = Layout::new(inputs, cfg.hidden, cfg.var_hidden);
    let mut model = PredictorModel {
        link_type,
        layout,
        theta: init_theta(&layout, cfg.seed),
        x_mean,
        x_std,
        y_mean,
        y_std,
        fixed_variance: None,
    };
    let to_samples = |idx: &[usize], m: &PredictorModel| -> Vec<Sample> {
        idx.iter()
            .map(|&i| Sample {
                x: m.standardize(&features[i].x),
                c: features[i].c,
                y: (targets[i] - m.y_mean) / m.y_std,
            })
            .collect()
    };
    let train = to_samples(&train_idx, &model);
    let val = to_samples(&val_idx, &model);
    let test = to_samples(&test_idx, &model);
    let log_std = y_std.ln();

    // Validation score in dB-unit NLL; for squared-error training the
    // variance is the current training residual variance.
    let score = |m: &mut PredictorModel, set: &[Sample]| -> f64 {
        if set.is_empty() {
            return f64::NAN;
        }
        if cfg.objective == Objective::Mse {
            let rv = 2.0 * mean_loss(&layout, &m.theta, &train, Objective::Mse);
            m.fixed_variance = Some(rv.max(VARIANCE_EPS));
        }
        let nll = set
            .iter()
            .map(|s| {
                let t = forward(&layout, &m.theta, &s.x, &s.c);
                let var = m.fixed_variance.unwrap_or(t.var);
                0.5 * (2.0 * std::f64::consts::PI * var).ln() + (s.y - t.mu).powi(2) / (2.0 * var)
            })
            .sum::<f64>()
            / set.len() as f64;
        nll + log_std
    };

    let mut train_loss = vec![mean_loss(&layout, &model.theta, &train, cfg.objective)];
    let mut val_nll = vec![score(&mut model, if val.is_empty() { &train } else { &val })];
    let mut best = (0usize, model.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let (_, grad) = loss_and_grad(&layout, &model.theta, &batch, cfg.objective);
            for (t, g) in model.theta.iter_mut().zip(&grad) {
                *t -= cfg.learning_rate * g;
            }
        }
        train_loss.push(mean_loss(&layout, &model.theta, &train, cfg.objective));
        let v = score(&mut model, if val.is_empty() { &train } else { &val });
        if v < val_nll[best.0] || !val_nll[best.0].is_finite() {
            best = (epoch, model.clone());
        }
        val_nll.push(v);
    }
    let (best_epoch, mut model) = best;
    let test_nll = score(&mut model, if test.is_empty() { &train } else { &test });
    Ok((
        model,
        TrainingReport {
            train_loss,
            val_nll,
            best_epoch,
            test_nll,
            degenerate,
            sizes: (train.len(), val.len(), test.len()),
        },
    ))
}
