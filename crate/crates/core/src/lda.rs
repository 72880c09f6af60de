//! Topic-model baseline.
//!
//! Latent Dirichlet allocation is fitted by collapsed Gibbs sampling. Each
//! segment is summarized by the mean document-topic distribution of its
//! documents, and the indicator is the total variation distance between
//! the two segment summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::confusion::{CurvePoint, IndicatorCurve, Method};
use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::features::Vocabulary;
use crate::windows::SegmentPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    /// Sweeps after burn-in. The posterior mean uses the last 20% of them.
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 20,
            alpha: None,
            beta: 0.01,
            iterations: 83,
            burn_in: 22,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }

    /// Number of trailing sweeps averaged into the posterior mean.
    pub fn averaged_sweeps(&self) -> usize {
        self.iterations.div_ceil(5).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub topics: usize,
    pub vocab_size: usize,
    /// `topics × vocab_size`, rows are `P(word | topic)`.
    pub topic_word: Vec<f64>,
    /// `documents × topics`, rows are `P(topic | document)`.
    pub doc_topic: Vec<f64>,
    pub config: LdaConfig,
    /// Documents with no in-vocabulary token; their rows are uniform.
    pub empty_docs: Vec<usize>,
    /// Final token-topic assignments, per document.
    pub assignments: Vec<Vec<u16>>,
}

impl TopicModel {
    pub fn documents(&self) -> usize {
        self.doc_topic.len() / self.topics
    }

    pub fn doc_row(&self, d: usize) -> &[f64] {
        &self.doc_topic[d * self.topics..(d + 1) * self.topics]
    }

    pub fn topic_row(&self, k: usize) -> &[f64] {
        &self.topic_word[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    /// Writes `topic_word.csv`, `doc_topic.csv` and `lda_meta.json` into `dir`.
    pub fn dump(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let matrix = |data: &[f64], cols: usize| {
            let mut s = String::new();
            for row in data.chunks(cols) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", line.join(","));
            }
            s
        };
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        write("topic_word.csv", matrix(&self.topic_word, self.vocab_size))?;
        write("doc_topic.csv", matrix(&self.doc_topic, self.topics))?;
        let meta = serde_json::json!({
            "topics": self.topics,
            "alpha": self.config.alpha(),
            "beta": self.config.beta,
            "seed": self.config.seed,
            "iterations": self.config.iterations,
            "burn_in": self.config.burn_in,
            "averaged_sweeps": self.config.averaged_sweeps(),
            "passes": "mapped to burn_in",
            "chunk_size": null,
            "vocab_size": self.vocab_size,
            "documents": self.documents(),
        });
        write("lda_meta.json", serde_json::to_string_pretty(&meta)? + "\n")
    }
}

pub fn fit_lda(corpus: &CorpusIndex, vocab: &Vocabulary, cfg: &LdaConfig) -> Result<TopicModel> {
    let k = cfg.topics;
    if k == 0 || k > u16::MAX as usize {
        return Err(Error::InvalidArgument(format!("topic count {k} out of range")));
    }
    if cfg.iterations == 0 || !(cfg.beta > 0.0) || !(cfg.alpha() > 0.0) {
        return Err(Error::InvalidArgument(
            "iterations, alpha and beta must be positive".into(),
        ));
    }
    let v = vocab.len();
    let alpha = cfg.alpha();
    let beta = cfg.beta;
    let vbeta = v as f64 * beta;

    let docs: Vec<Vec<usize>> = corpus.documents().iter().map(|d| vocab.encode(&d.text())).collect();
    let n = docs.len();
    let empty_docs: Vec<usize> = (0..n).filter(|&d| docs[d].is_empty()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut n_dk = vec![0u32; n * k];
    let mut n_kw = vec![0u32; k * v];
    let mut n_k = vec![0u32; k];
    let mut z: Vec<Vec<u16>> = docs
        .iter()
        .enumerate()
        .map(|(d, words)| {
            words
                .iter()
                .map(|&w| {
                    let t = rng.gen_range(0..k);
                    n_dk[d * k + t] += 1;
                    n_kw[t * v + w] += 1;
                    n_k[t] += 1;
                    t as u16
                })
                .collect()
        })
        .collect();

    let sweeps = cfg.burn_in + cfg.iterations;
    let first_sample = sweeps - cfg.averaged_sweeps();
    let mut theta_acc = vec![0.0f64; n * k];
    let mut phi_acc = vec![0.0f64; k * v];
    let mut samples = 0usize;
    let mut weights = vec![0.0f64; k];

    for sweep in 0..sweeps {
        for (d, words) in docs.iter().enumerate() {
            let dk = &mut n_dk[d * k..(d + 1) * k];
            for (i, &w) in words.iter().enumerate() {
                let old = z[d][i] as usize;
                dk[old] -= 1;
                n_kw[old * v + w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (dk[t] as f64 + alpha) * (n_kw[t * v + w] as f64 + beta) / (n_k[t] as f64 + vbeta);
                    weights[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = weights.partition_point(|&c| c <= u).min(k - 1);

                dk[new] += 1;
                n_kw[new * v + w] += 1;
                n_k[new] += 1;
                z[d][i] = new as u16;
            }
        }
        if sweep >= first_sample {
            samples += 1;
            for d in 0..n {
                let len = docs[d].len() as f64;
                for t in 0..k {
                    theta_acc[d * k + t] += (n_dk[d * k + t] as f64 + alpha) / (len + k as f64 * alpha);
                }
            }
            for t in 0..k {
                let denom = n_k[t] as f64 + vbeta;
                for w in 0..v {
                    phi_acc[t * v + w] += (n_kw[t * v + w] as f64 + beta) / denom;
                }
            }
        }
    }

    let inv = 1.0 / samples as f64;
    theta_acc.iter_mut().for_each(|x| *x *= inv);
    phi_acc.iter_mut().for_each(|x| *x *= inv);
    for &d in &empty_docs {
        theta_acc[d * k..(d + 1) * k].fill(1.0 / k as f64);
    }
    Ok(TopicModel {
        topics: k,
        vocab_size: v,
        topic_word: phi_acc,
        doc_topic: theta_acc,
        config: cfg.clone(),
        empty_docs,
        assignments: z,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTopicDist {
    pub candidate: NaiveDate,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
}

fn mean_rows(model: &TopicModel, docs: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0; model.topics];
    for &d in docs {
        for (a, x) in acc.iter_mut().zip(model.doc_row(d)) {
            *a += x;
        }
    }
    let inv = 1.0 / docs.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

/// Mean topic distribution of each segment of `pair`.
pub fn segment_topic_dist(model: &TopicModel, pair: &SegmentPair) -> SegmentTopicDist {
    SegmentTopicDist {
        candidate: pair.candidate,
        p0: mean_rows(model, &pair.before_docs),
        p1: mean_rows(model, &pair.after_docs),
    }
}

/// Half the L1 distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidDistribution(format!(
            "length mismatch {} vs {}",
            p.len(),
            q.len()
        )));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidDistribution(format!("{name} has negative or non-finite entries")));
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDistribution(format!("{name} sums to {s}")));
        }
    }
    let d = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(d.min(1.0))
}

pub fn lda_indicator(model: &TopicModel, pairs: &[SegmentPair]) -> Result<IndicatorCurve> {
    let points = pairs
        .iter()
        .map(|pair| {
            let s = segment_topic_dist(model, pair);
            let tv = tv_distance(&s.p0, &s.p1)?;
            Ok(CurvePoint {
                date: pair.candidate,
                value: tv,
                raw: tv,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndicatorCurve {
        method: Method::Lda,
        points,
        window_l: pairs.first().map_or(0, |p| p.before.len()),
        seed: model.config.seed,
    })
}
