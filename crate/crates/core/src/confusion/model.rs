use rayon::prelude::*;

use crate::features::FeatureMatrix;

use super::tasks::HeadRows;

/// Probability clamp keeping `ln` finite.
pub const PROB_EPS: f64 = 1e-12;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn bce(p: f64, label: u8) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m_weights: Vec<f64>,
    pub v_weights: Vec<f64>,
    pub m_biases: Vec<f64>,
    pub v_biases: Vec<f64>,
    pub step: u64,
}

/// Linear heads over shared features, one per candidate.
///
/// Weights are stored head-major: head `k` owns `weights[k*dim..(k+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionModel {
    pub dim: usize,
    pub tasks: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub adam: AdamState,
    pub seed: u64,
}

impl ConfusionModel {
    pub fn zeros(dim: usize, tasks: usize, seed: u64) -> Self {
        Self {
            dim,
            tasks,
            weights: vec![0.0; dim * tasks],
            biases: vec![0.0; tasks],
            adam: AdamState {
                m_weights: vec![0.0; dim * tasks],
                v_weights: vec![0.0; dim * tasks],
                m_biases: vec![0.0; tasks],
                v_biases: vec![0.0; tasks],
                step: 0,
            },
            seed,
        }
    }

    pub fn head(&self, k: usize) -> &[f64] {
        &self.weights[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn logit(&self, features: &FeatureMatrix, row: usize, k: usize) -> f64 {
        features.row(row).dot(self.head(k)) + self.biases[k]
    }

    pub fn probability(&self, features: &FeatureMatrix, row: usize, k: usize) -> f64 {
        sigmoid(self.logit(features, row, k))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|v| v.is_finite())
    }
}

/// Class-balanced cross-entropy averaged over heads.
///
/// `heads[k]` lists the rows of task `k` and `class_sizes[k]` the
/// normalizers `|D_0|, |D_1|` of that task. Each class contributes with
/// weight `1 / (2 |D_y|)`, so the result does not depend on class balance.
pub fn unbiased_loss(
    model: &ConfusionModel,
    features: &FeatureMatrix,
    heads: &[HeadRows],
    class_sizes: &[[f64; 2]],
) -> f64 {
    let per_head: Vec<f64> = heads
        .par_iter()
        .enumerate()
        .map(|(k, rows)| {
            let mut per_class = [0.0f64; 2];
            for &(row, y) in rows {
                per_class[y as usize] += bce(model.probability(features, row, k), y);
            }
            (0..2)
                .filter(|&y| class_sizes[k][y] > 0.0)
                .map(|y| per_class[y] / (2.0 * class_sizes[k][y]))
                .sum()
        })
        .collect();
    per_head.iter().sum::<f64>() / heads.len() as f64
}

/// Loss contribution and gradient of one head, scaled by `1 / tasks`.
///
/// Accumulates into `grad_w` / returns `(loss, grad_b)`. Clamping only
/// affects the loss value, never the gradient.
#[inline]
pub(crate) fn head_loss_grad(
    weights: &[f64],
    bias: f64,
    rows: &[(usize, u8)],
    sizes: [f64; 2],
    tasks: usize,
    features: &FeatureMatrix,
    grad_w: &mut [f64],
) -> (f64, f64) {
    let scale = [
        if sizes[0] > 0.0 { 1.0 / (2.0 * sizes[0] * tasks as f64) } else { 0.0 },
        if sizes[1] > 0.0 { 1.0 / (2.0 * sizes[1] * tasks as f64) } else { 0.0 },
    ];
    let mut loss = 0.0;
    let mut grad_b = 0.0;
    for &(row, y) in rows {
        let x = features.row(row);
        let p = sigmoid(x.dot(weights) + bias);
        let w = scale[y as usize];
        loss += w * bce(p, y);
        let coef = w * (p - y as f64);
        grad_b += coef;
        x.axpy(coef, grad_w);
    }
    (loss, grad_b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Analytic gradient of [`unbiased_loss`] with respect to all parameters.
pub fn loss_and_gradient(
    model: &ConfusionModel,
    features: &FeatureMatrix,
    heads: &[HeadRows],
    class_sizes: &[[f64; 2]],
) -> (f64, Gradient) {
    let mut grad = Gradient {
        weights: vec![0.0; model.weights.len()],
        biases: vec![0.0; model.tasks],
    };
    let mut loss = 0.0;
    for (k, rows) in heads.iter().enumerate() {
        let gw = &mut grad.weights[k * model.dim..(k + 1) * model.dim];
        let (l, gb) = head_loss_grad(
            model.head(k),
            model.biases[k],
            rows,
            class_sizes[k],
            model.tasks,
            features,
            gw,
        );
        loss += l;
        grad.biases[k] = gb;
    }
    (loss, grad)
}

/// Balanced error of head `k` on its rows; prediction is 1 iff `p >= 0.5`.
pub fn head_error_rate(model: &ConfusionModel, features: &FeatureMatrix, k: usize, rows: &[(usize, u8)]) -> f64 {
    let mut wrong = [0usize; 2];
    let mut count = [0usize; 2];
    for &(row, y) in rows {
        let predicted = u8::from(model.probability(features, row, k) >= 0.5);
        count[y as usize] += 1;
        wrong[y as usize] += usize::from(predicted != y);
    }
    let mut err = 0.0;
    for y in 0..2 {
        if count[y] > 0 {
            err += wrong[y] as f64 / count[y] as f64;
        }
    }
    0.5 * err
}

pub fn sizes_as_f64(sizes: &[[usize; 2]]) -> Vec<[f64; 2]> {
    sizes.iter().map(|s| [s[0] as f64, s[1] as f64]).collect()
}
