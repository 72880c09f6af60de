//! Multi-task learning-by-confusion.
//!
//! One logistic head per candidate date shares the document features. Each
//! head learns to separate the documents before its candidate from those
//! after it, and `1 - 2 * error` on held-out documents lower-bounds the
//! total variation distance between the two segments.

mod curve;
mod model;
mod tasks;
mod train;

use rayon::prelude::*;

pub use curve::{predict_changepoint, CurvePoint, IndicatorCurve, Method, CSV_HEADER};
pub use model::{
    head_error_rate, loss_and_gradient, sigmoid, sizes_as_f64, unbiased_loss, AdamState, ConfusionModel,
    Gradient, PROB_EPS,
};
pub use tasks::{build_tasks, validation_count, HeadRows, LayoutEntry, Membership, Split, TaskLayout};
pub use train::{train, EpochLoss, TrainConfig, TrainOutcome};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Balanced validation error of the head belonging to `task`.
pub fn error_rate(model: &ConfusionModel, layout: &TaskLayout, features: &FeatureMatrix, task: usize) -> Result<f64> {
    let rows: HeadRows = layout
        .entries()
        .iter()
        .filter(|e| e.split == Split::Val)
        .flat_map(|e| {
            e.memberships
                .iter()
                .filter(|m| m.task as usize == task)
                .map(move |m| (e.row, m.label))
        })
        .collect();
    for class in 0..2u8 {
        if !rows.iter().any(|&(_, y)| y == class) {
            return Err(Error::EmptyValidationClass {
                candidate: layout.candidates()[task],
                class,
            });
        }
    }
    Ok(head_error_rate(model, features, task, &rows))
}

/// `max(0, 1 - 2 p_err)` per candidate; raw values are kept unclamped.
pub fn indicator(model: &ConfusionModel, layout: &TaskLayout, features: &FeatureMatrix, window_l: usize) -> IndicatorCurve {
    let heads = layout.head_rows(Split::Val);
    let points = heads
        .par_iter()
        .enumerate()
        .map(|(k, rows)| {
            let raw = 1.0 - 2.0 * head_error_rate(model, features, k, rows);
            CurvePoint {
                date: layout.candidates()[k],
                value: raw.max(0.0),
                raw,
            }
        })
        .collect();
    IndicatorCurve {
        method: Method::Confusion,
        points,
        window_l,
        seed: model.seed,
    }
}
