use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{head_loss_grad, sizes_as_f64, unbiased_loss, ConfusionModel};
use super::tasks::{Split, TaskLayout};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub min_epochs: usize,
    pub max_epochs: usize,
    /// Epochs without a new best validation loss before stopping, counted
    /// only once `min_epochs` have run.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 8e-5,
            batch_size: 64,
            min_epochs: 1000,
            max_epochs: 5000,
            patience: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub val: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub model: ConfusionModel,
    pub history: Vec<EpochLoss>,
    /// 0 means the untrained (all-zero) parameters were never beaten.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

struct HeadState {
    w: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    g: Vec<f64>,
    b: f64,
    mb: f64,
    vb: f64,
}

impl HeadState {
    fn new(dim: usize) -> Self {
        Self {
            w: vec![0.0; dim],
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            g: vec![0.0; dim],
            b: 0.0,
            mb: 0.0,
            vb: 0.0,
        }
    }

    #[inline]
    fn adam(&mut self, grad_b: f64, lr: f64, inv_bc1: f64, inv_bc2: f64) {
        for ((w, g), (m, v)) in self
            .w
            .iter_mut()
            .zip(&self.g)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *w -= lr * (*m * inv_bc1) / ((*v * inv_bc2).sqrt() + ADAM_EPS);
        }
        self.mb = BETA1 * self.mb + (1.0 - BETA1) * grad_b;
        self.vb = BETA2 * self.vb + (1.0 - BETA2) * grad_b * grad_b;
        self.b -= lr * (self.mb * inv_bc1) / ((self.vb * inv_bc2).sqrt() + ADAM_EPS);
    }
}

fn assemble(heads: &[HeadState], dim: usize, step: u64, seed: u64) -> ConfusionModel {
    let mut model = ConfusionModel::zeros(dim, heads.len(), seed);
    for (k, h) in heads.iter().enumerate() {
        let r = k * dim..(k + 1) * dim;
        model.weights[r.clone()].copy_from_slice(&h.w);
        model.adam.m_weights[r.clone()].copy_from_slice(&h.m);
        model.adam.v_weights[r].copy_from_slice(&h.v);
        model.biases[k] = h.b;
        model.adam.m_biases[k] = h.mb;
        model.adam.v_biases[k] = h.vb;
    }
    model.adam.step = step;
    model
}

/// Trains every head jointly with Adam on the class-balanced loss.
///
/// Each epoch is one pass over the shuffled training rows. Minibatch
/// losses use the full training class sizes scaled by the batch fraction,
/// so their expectation equals the full training loss.
pub fn train(layout: &TaskLayout, features: &FeatureMatrix, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if cfg.batch_size == 0 || cfg.max_epochs == 0 || !(cfg.lr > 0.0) {
        return Err(Error::InvalidArgument(
            "batch size, max epochs and learning rate must be positive".into(),
        ));
    }
    if let Some(e) = layout.entries().iter().find(|e| e.row >= features.rows()) {
        return Err(Error::InvalidArgument(format!(
            "layout row {} outside feature matrix of {} rows",
            e.row,
            features.rows()
        )));
    }
    let dim = features.dim();
    let tasks = layout.tasks();
    let train_sizes = sizes_as_f64(&layout.class_sizes(Split::Train));
    let val_sizes = sizes_as_f64(&layout.class_sizes(Split::Val));
    let val_heads = layout.head_rows(Split::Val);
    let mut order: Vec<usize> = layout
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.split == Split::Train && !e.memberships.is_empty())
        .map(|(i, _)| i)
        .collect();
    let n_train = order.len();

    let mut heads: Vec<HeadState> = (0..tasks).map(|_| HeadState::new(dim)).collect();
    let mut batch_rows: Vec<Vec<(usize, u8)>> = vec![Vec::new(); tasks];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut step: u64 = 0;

    let initial = ConfusionModel::zeros(dim, tasks, cfg.seed);
    let mut best_val = unbiased_loss(&initial, features, &val_heads, &val_sizes);
    let mut best = initial;
    let mut best_epoch = 0;
    let mut history = Vec::new();
    if n_train == 0 {
        return Ok(TrainOutcome {
            model: best,
            history,
            best_epoch,
            best_val_loss: best_val,
        });
    }

    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch_rows.iter_mut().for_each(Vec::clear);
            for &i in chunk {
                let e = &layout.entries()[i];
                for m in &e.memberships {
                    batch_rows[m.task as usize].push((e.row, m.label));
                }
            }
            let frac = chunk.len() as f64 / n_train as f64;
            step += 1;
            let inv_bc1 = 1.0 / (1.0 - BETA1.powf(step as f64));
            let inv_bc2 = 1.0 / (1.0 - BETA2.powf(step as f64));
            let losses: Vec<f64> = heads
                .par_iter_mut()
                .zip(batch_rows.par_iter())
                .enumerate()
                .map(|(k, (h, rows))| {
                    h.g.iter_mut().for_each(|g| *g = 0.0);
                    let sizes = [train_sizes[k][0] * frac, train_sizes[k][1] * frac];
                    let (loss, gb) = head_loss_grad(&h.w, h.b, rows, sizes, tasks, features, &mut h.g);
                    h.adam(gb, cfg.lr, inv_bc1, inv_bc2);
                    loss
                })
                .collect();
            train_loss += frac * losses.iter().sum::<f64>();
        }

        let current = assemble(&heads, dim, step, cfg.seed);
        let val = unbiased_loss(&current, features, &val_heads, &val_sizes);
        if !val.is_finite() || !train_loss.is_finite() || !current.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        history.push(EpochLoss {
            epoch,
            train: train_loss,
            val,
        });
        if val < best_val {
            best_val = val;
            best = current;
            best_epoch = epoch;
            since_best = 0;
        } else if epoch > cfg.min_epochs {
            since_best += 1;
        }
        if epoch >= cfg.min_epochs && since_best >= cfg.patience {
            break;
        }
    }

    let last = assemble(&heads, dim, step, cfg.seed);
    best.adam = last.adam;
    Ok(TrainOutcome {
        model: best,
        history,
        best_epoch,
        best_val_loss: best_val,
    })
}
