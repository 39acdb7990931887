//! Mini-batch Adam training with optional rotation augmentation.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Model, Real};
use crate::error::{Error, Result};
use crate::grid::{load_grid, GroundTruthGrid};
use crate::loss::{LossConfig, LossParts};
use crate::pointcloud::{load_cloud, normalize_intensity, pillarize, rotate_label_grid, rotate_z, PointCloud};
use crate::rng::{self, derive_seed};
use crate::synth::Manifest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Rotate every sample by an independent random angle each epoch.
    pub augment: bool,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 5,
            augment: true,
            learning_rate: 3e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size > 0
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training configuration {self:?}")))
        }
    }
}

/// Adam moments for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Real> Adam<T> {
    pub fn new(len: usize, cfg: &TrainConfig) -> Self {
        Adam {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
            learning_rate: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
        }
    }

    pub fn update(&mut self, params: &mut [T], grad: &[T]) {
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::cast_from(self.beta1), T::cast_from(self.beta2));
        let c1 = T::cast_from(1.0 - self.beta1.powi(t));
        let c2 = T::cast_from(1.0 - self.beta2.powi(t));
        let lr = T::cast_from(self.learning_rate);
        let eps = T::cast_from(self.epsilon);
        let one = T::one();
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

/// Per-epoch summary. `epoch` counts from 1; the KL weight of epoch `t`
/// is the one for zero-based `t − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lambda_t: f64,
    /// Mean over samples of the summed per-sample loss.
    pub mean_loss: f64,
    /// Mean over samples of the per-cell KL regularizer.
    pub mean_kl: f64,
    /// Mean over samples of the per-cell loss.
    pub mean_loss_per_cell: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,lambda_t,mean_loss,mean_kl,mean_loss_per_cell\n");
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                e.epoch, e.lambda_t, e.mean_loss, e.mean_kl, e.mean_loss_per_cell
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// A training pair held in memory.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub cloud: PointCloud,
    pub truth: GroundTruthGrid,
}

/// Reads every pair listed in a manifest.
pub fn load_training_set(manifest: &Manifest) -> Result<Vec<TrainingSample>> {
    manifest
        .samples
        .par_iter()
        .map(|entry| {
            let cloud = load_cloud(manifest.cloud_path(entry))?;
            let truth = load_grid(manifest.label_path(entry))?.into_labels()?;
            Ok(TrainingSample { cloud, truth })
        })
        .collect()
}

/// Trains `model` in place and returns the per-epoch log.
///
/// Each epoch shuffles the samples, and with augmentation rotates each one
/// by a fresh uniform angle. Per-sample gradients within a batch are
/// computed in parallel and summed in sample order, so the result depends
/// only on the inputs and `cfg.seed`. The batch gradient is the mean of
/// per-sample gradients.
pub fn train<T: Real>(
    model: &mut Model<T>,
    samples: &[TrainingSample],
    loss_cfg: &LossConfig,
    cfg: &TrainConfig,
) -> Result<TrainingLog> {
    cfg.validate()?;
    loss_cfg.validate()?;
    let grid = model.config().grid;
    for (i, s) in samples.iter().enumerate() {
        if s.truth.spec() != &grid {
            return Err(Error::Config(format!(
                "sample {i} has label grid {:?}, model expects {grid:?}",
                s.truth.spec()
            )));
        }
    }
    let pct = model.config().intensity_percentile;
    let normalized = samples
        .iter()
        .map(|s| normalize_intensity(&s.cloud, pct))
        .collect::<Result<Vec<_>>>()?;

    let mut adam = Adam::new(model.params().len(), cfg);
    let mut log = TrainingLog::default();
    let n = samples.len();
    for epoch in 0..cfg.epochs {
        let lambda = loss_cfg.lambda(epoch);
        let mut rng = rng::stream(cfg.seed, epoch as u64);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let angles: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();

        let (mut sum_loss, mut sum_kl, mut sum_cell) = (0.0, 0.0, 0.0);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results = batch
                .par_iter()
                .enumerate()
                .map(|(k, &i)| {
                    let (cloud, truth) = if cfg.augment {
                        let angle = angles[b * cfg.batch_size + k];
                        (rotate_z(&normalized[i], angle), rotate_label_grid(&samples[i].truth, angle))
                    } else {
                        (normalized[i].clone(), samples[i].truth.clone())
                    };
                    let seed = derive_seed(cfg.seed, (epoch * n + i) as u64);
                    let pillars = pillarize(&cloud, &grid, &model.config().pillars, seed)?;
                    model.loss_and_gradient_at(&pillars, &truth, lambda, loss_cfg)
                })
                .collect::<Result<Vec<(LossParts, Vec<T>)>>>()?;

            let scale = T::cast_from(1.0 / batch.len() as f64);
            let mut grad = vec![T::zero(); model.params().len()];
            for (parts, g) in &results {
                if !parts.total.is_finite() {
                    return Err(Error::NonFinite {
                        epoch: epoch + 1,
                        batch: b,
                        detail: format!("sample loss {parts:?}"),
                    });
                }
                sum_loss += parts.total;
                sum_kl += parts.mean_kl();
                sum_cell += parts.mean_per_cell();
                for (acc, &v) in grad.iter_mut().zip(g) {
                    *acc += v * scale;
                }
            }
            if let Some(k) = grad.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    epoch: epoch + 1,
                    batch: b,
                    detail: format!("gradient of parameter {k} is {:?}", grad[k]),
                });
            }
            adam.update(model.params_mut(), &grad);
        }

        let entry = EpochLog {
            epoch: epoch + 1,
            lambda_t: lambda,
            mean_loss: sum_loss / n.max(1) as f64,
            mean_kl: sum_kl / n.max(1) as f64,
            mean_loss_per_cell: sum_cell / n.max(1) as f64,
        };
        log::info!(
            "epoch {} lambda {:.2} loss {:.4} kl {:.5}",
            entry.epoch,
            entry.lambda_t,
            entry.mean_loss,
            entry.mean_kl
        );
        log.epochs.push(entry);
    }
    Ok(log)
}
