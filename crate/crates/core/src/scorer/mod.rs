//! Influence scoring: per-sample cross-entropy under a hashed n-gram
//! softmax classifier, or under an external model reached over a
//! line-delimited JSON protocol.

mod external;
mod features;

pub use external::{ExternalScorer, ScoreRequest};
pub use features::{featurize, featurize_source, FeatureVector, DEFAULT_DIM};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScorerError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("external scorer unavailable: {0}")]
    ScorerUnavailable(String),
    #[error("scorer protocol violation: {0}")]
    ProtocolViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Half-width of the uniform weight initialisation; 0 starts from zeros.
    pub init_scale: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper { learning_rate: 1e-3, l2: 1e-5, seed: 0, optimizer: Optimizer::Adam, init_scale: 0.0 }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub classes: usize,
    pub dim: usize,
    /// Row-major `classes x dim`.
    pub weights: Vec<f64>,
    pub step_count: u64,
    pub hyper: Hyper,
    /// Adam first and second moments, same layout as `weights`.
    pub moments: Option<(Vec<f64>, Vec<f64>)>,
}

/// Loss and confidence of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub loss: f64,
    pub predicted_class: usize,
    pub max_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub id: String,
    pub loss: f64,
    pub predicted_class: usize,
    pub max_probability: f64,
}

impl ModelState {
    /// Weights drawn from `hyper.seed`, uniform in `±init_scale`.
    pub fn new(classes: usize, dim: usize, hyper: Hyper) -> Result<Self, ScorerError> {
        if classes < 2 {
            return Err(ScorerError::DimensionMismatch(format!("need at least 2 classes, got {classes}")));
        }
        if !dim.is_power_of_two() {
            return Err(ScorerError::DimensionMismatch(format!("dimension {dim} is not a power of two")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let s = hyper.init_scale;
        let weights =
            (0..classes * dim).map(|_| if s > 0.0 { rng.random_range(-s..s) } else { 0.0 }).collect();
        let moments = (hyper.optimizer == Optimizer::Adam).then(|| (vec![0.0; classes * dim], vec![0.0; classes * dim]));
        Ok(ModelState { classes, dim, weights, step_count: 0, hyper, moments })
    }

    pub fn zeros(classes: usize, dim: usize) -> Self {
        ModelState::new(classes, dim, Hyper::default()).expect("valid shape")
    }

    fn check(&self, x: &FeatureVector, label: Option<usize>) -> Result<(), ScorerError> {
        if x.dim != self.dim {
            return Err(ScorerError::DimensionMismatch(format!("features have D={}, model has D={}", x.dim, self.dim)));
        }
        if let Some(bad) = x.entries.iter().find(|(i, _)| *i as usize >= self.dim) {
            return Err(ScorerError::DimensionMismatch(format!("feature index {} >= {}", bad.0, self.dim)));
        }
        match label {
            Some(l) if l >= self.classes => {
                Err(ScorerError::DimensionMismatch(format!("label {l} with {} classes", self.classes)))
            }
            _ => Ok(()),
        }
    }

    fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let row = &self.weights[c * self.dim..(c + 1) * self.dim];
                x.entries.iter().map(|&(i, v)| row[i as usize] * v).sum()
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

/// Log-sum-exp normalised probabilities.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

/// Lowest index among the largest entries.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Pre-softmax logits, used as the embedding for PCA and distances.
pub fn embed(model: &ModelState, x: &FeatureVector) -> Result<Vec<f64>, ScorerError> {
    model.check(x, None)?;
    Ok(model.logits(x))
}

pub fn predict_proba(model: &ModelState, x: &FeatureVector) -> Result<Vec<f64>, ScorerError> {
    Ok(softmax(&embed(model, x)?))
}

pub fn loss_of(model: &ModelState, x: &FeatureVector, label: usize) -> Result<Prediction, ScorerError> {
    model.check(x, Some(label))?;
    let z = model.logits(x);
    let lse = log_sum_exp(&z);
    let best = argmax(&z);
    Ok(Prediction { loss: (lse - z[label]).max(0.0), predicted_class: best, max_probability: (z[best] - lse).exp() })
}

/// Mean cross-entropy over the batch plus `l2 / 2 * |W|^2`.
pub fn objective(model: &ModelState, batch: &[(&FeatureVector, usize)]) -> Result<f64, ScorerError> {
    if batch.is_empty() {
        return Err(ScorerError::EmptyBatch);
    }
    let mut total = 0.0;
    for (x, y) in batch {
        model.check(x, Some(*y))?;
        let z = model.logits(x);
        total += log_sum_exp(&z) - z[*y];
    }
    let norm: f64 = model.weights.iter().map(|w| w * w).sum();
    Ok(total / batch.len() as f64 + 0.5 * model.hyper.l2 * norm)
}

/// Dense gradient of [`objective`], same layout as the weights.
pub fn gradient(model: &ModelState, batch: &[(&FeatureVector, usize)]) -> Result<Vec<f64>, ScorerError> {
    if batch.is_empty() {
        return Err(ScorerError::EmptyBatch);
    }
    let l2 = model.hyper.l2;
    let mut g: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let scale = 1.0 / batch.len() as f64;
    for (x, y) in batch {
        model.check(x, Some(*y))?;
        let p = softmax(&model.logits(x));
        for (c, pc) in p.iter().enumerate() {
            let coef = scale * (pc - if c == *y { 1.0 } else { 0.0 });
            let row = &mut g[c * model.dim..(c + 1) * model.dim];
            for &(i, v) in &x.entries {
                row[i as usize] += coef * v;
            }
        }
    }
    Ok(g)
}

/// One optimiser step on the batch objective.
pub fn train_step(model: &mut ModelState, batch: &[(&FeatureVector, usize)]) -> Result<(), ScorerError> {
    let g = gradient(model, batch)?;
    let lr = model.hyper.learning_rate;
    model.step_count += 1;
    match (&mut model.moments, model.hyper.optimizer) {
        (Some((m, v)), Optimizer::Adam) => {
            let t = model.step_count as i32;
            let (c1, c2) = (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t));
            for i in 0..g.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                model.weights[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
            }
        }
        _ => {
            for (w, gi) in model.weights.iter_mut().zip(&g) {
                *w -= lr * gi;
            }
        }
    }
    debug_assert!(model.is_finite());
    Ok(())
}

pub enum ScorerBackend {
    BuiltIn,
    External(ExternalScorer),
}

/// Score candidates in input order. The built-in path featurizes each
/// request's text; the external path sends it over the wire.
pub fn score_batch(
    backend: &mut ScorerBackend,
    model: &ModelState,
    requests: &[ScoreRequest],
) -> Result<Vec<ScoredCandidate>, ScorerError> {
    match backend {
        ScorerBackend::BuiltIn => requests
            .par_iter()
            .map(|r| {
                let x = featurize_source(&r.text, r.lang, model.dim);
                let p = loss_of(model, &x, r.label)?;
                Ok(ScoredCandidate {
                    id: r.id.clone(),
                    loss: p.loss,
                    predicted_class: p.predicted_class,
                    max_probability: p.max_probability,
                })
            })
            .collect(),
        ScorerBackend::External(ext) => ext.score(requests),
    }
}

#[cfg(test)]
mod tests;
