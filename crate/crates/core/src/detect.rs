//! End-to-end detection on a corpus: grid, windows, features, indicator.

use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::confusion::{self, build_tasks, predict_changepoint, CurvePoint, IndicatorCurve, Method, TrainConfig};
use crate::corpus::{build_candidate_grid, CandidateGrid, CorpusIndex};
use crate::error::Result;
use crate::features::{fit_vocabulary, load_embeddings, tfidf_transform, FeatureMatrix};
use crate::lda::{fit_lda, lda_indicator, LdaConfig, TopicModel};
use crate::windows::{segments, SegmentPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FeatureSource {
    Tfidf { min_df: usize, max_df: f64 },
    Embeddings { path: PathBuf },
}

impl Default for FeatureSource {
    fn default() -> Self {
        FeatureSource::Tfidf { min_df: 2, max_df: 0.9 }
    }
}

/// Corpus restricted to the full grid, with its windows.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub corpus: CorpusIndex,
    pub grid: CandidateGrid,
    pub pairs: Vec<SegmentPair>,
}

pub fn prepare(corpus: &CorpusIndex, interval: (NaiveDate, NaiveDate), window_l: usize) -> Result<Prepared> {
    let outer = build_candidate_grid(corpus, interval, window_l)?;
    let (first, last) = (outer.full_grid()[0], *outer.full_grid().last().unwrap());
    let docs = corpus
        .documents()
        .iter()
        .filter(|d| d.date >= first && d.date <= last)
        .cloned()
        .collect();
    let corpus = CorpusIndex::from_documents(docs)?;
    let grid = build_candidate_grid(&corpus, interval, window_l)?;
    let pairs = segments(&grid, &corpus);
    Ok(Prepared { corpus, grid, pairs })
}

pub fn build_features(prep: &Prepared, source: &FeatureSource) -> Result<FeatureMatrix> {
    match source {
        FeatureSource::Tfidf { min_df, max_df } => {
            let vocab = fit_vocabulary(&prep.corpus, *min_df, *max_df)?;
            Ok(tfidf_transform(&prep.corpus, &vocab)?.features)
        }
        FeatureSource::Embeddings { path } => load_embeddings(path, &prep.corpus),
    }
}

#[derive(Debug, Clone)]
pub struct ConfusionRun {
    pub curve: IndicatorCurve,
    pub predicted: Option<NaiveDate>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

pub fn run_confusion(
    prep: &Prepared,
    features: &FeatureMatrix,
    split_seed: u64,
    train_cfg: &TrainConfig,
) -> Result<ConfusionRun> {
    let layout = build_tasks(&prep.pairs, &prep.corpus, split_seed)?;
    let outcome = confusion::train(&layout, features, train_cfg)?;
    let curve = confusion::indicator(&outcome.model, &layout, features, prep.grid.margin());
    Ok(ConfusionRun {
        predicted: predict_changepoint(&curve),
        curve,
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.history.len(),
        best_val_loss: outcome.best_val_loss,
    })
}

#[derive(Debug, Clone)]
pub struct LdaRun {
    pub curve: IndicatorCurve,
    pub predicted: Option<NaiveDate>,
    pub model: TopicModel,
}

pub fn run_lda(prep: &Prepared, min_df: usize, max_df: f64, cfg: &LdaConfig) -> Result<LdaRun> {
    let vocab = fit_vocabulary(&prep.corpus, min_df, max_df)?;
    let model = fit_lda(&prep.corpus, &vocab, cfg)?;
    let mut curve = lda_indicator(&model, &prep.pairs)?;
    curve.window_l = prep.grid.margin();
    Ok(LdaRun {
        predicted: predict_changepoint(&curve),
        curve,
        model,
    })
}

/// Constant curve `1 / |T*|`; every candidate is an equally likely guess.
pub fn random_curve(grid: &CandidateGrid, seed: u64) -> IndicatorCurve {
    let v = 1.0 / grid.candidates().len() as f64;
    IndicatorCurve {
        method: Method::Random,
        points: grid
            .candidates()
            .iter()
            .map(|&date| CurvePoint { date, value: v, raw: v })
            .collect(),
        window_l: grid.margin(),
        seed,
    }
}
