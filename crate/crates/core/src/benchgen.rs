//! Synthetic benchmarks with a known induced changepoint.
//!
//! Documents are bags of tokens drawn from a unigram topic mixed with a
//! shared background distribution. Two schemes are provided: a topic switch
//! on a given date, and a splice of two categories of an existing corpus.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_jsonl, CorpusIndex, Document};
use crate::error::{Error, Result};

/// A unigram distribution over named words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDistribution {
    pub words: Vec<String>,
    pub weights: Vec<f64>,
}

impl WordDistribution {
    pub fn new(words: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if words.is_empty() || words.len() != weights.len() {
            return Err(Error::InvalidArgument("word distribution needs one weight per word".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("word weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("word weights sum to zero".into()));
        }
        Ok(Self {
            words,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// `size` words `{prefix}{j}` with Zipf weights `1 / (j + 1)^exponent`.
    pub fn zipf(prefix: &str, size: usize, exponent: f64) -> Self {
        let words = (0..size).map(|j| format!("{prefix}{j}")).collect();
        let weights = (0..size).map(|j| 1.0 / ((j + 1) as f64).powf(exponent)).collect();
        Self::new(words, weights).expect("zipf weights are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub name: String,
    pub words: WordDistribution,
    /// Mean body length in tokens (Poisson, at least one token).
    pub doc_length: f64,
    /// Fraction of tokens drawn from the shared background.
    pub background_mix: f64,
}

impl TopicSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.background_mix) {
            return Err(Error::InvalidArgument(format!(
                "topic `{}`: background mix {} outside [0, 1)",
                self.name, self.background_mix
            )));
        }
        if !(self.doc_length > 0.0) {
            return Err(Error::InvalidArgument(format!("topic `{}`: doc length must be positive", self.name)));
        }
        Ok(())
    }
}

/// Topic whose vocabulary `k{index}w*` is disjoint from every other index.
pub fn disjoint_topic(index: usize, vocab_size: usize, doc_length: f64, background_mix: f64) -> TopicSpec {
    TopicSpec {
        name: format!("topic{index}"),
        words: WordDistribution::zipf(&format!("k{index}w"), vocab_size, 1.0),
        doc_length,
        background_mix,
    }
}

pub fn default_background(size: usize) -> WordDistribution {
    WordDistribution::zipf("bg", size, 1.0)
}

struct TokenSampler<'a> {
    topic: &'a TopicSpec,
    background: &'a WordDistribution,
    topic_index: WeightedIndex<f64>,
    background_index: WeightedIndex<f64>,
    length: Poisson<f64>,
}

impl<'a> TokenSampler<'a> {
    fn new(topic: &'a TopicSpec, background: &'a WordDistribution) -> Result<Self> {
        topic.validate()?;
        let bad = |e: rand::distributions::WeightedError| Error::InvalidArgument(e.to_string());
        Ok(Self {
            topic,
            background,
            topic_index: WeightedIndex::new(&topic.words.weights).map_err(bad)?,
            background_index: WeightedIndex::new(&background.weights).map_err(bad)?,
            length: Poisson::new(topic.doc_length).map_err(|e| Error::InvalidArgument(e.to_string()))?,
        })
    }

    fn token<R: Rng>(&self, rng: &mut R) -> &'a str {
        if rng.gen::<f64>() < self.topic.background_mix {
            &self.background.words[self.background_index.sample(rng)]
        } else {
            &self.topic.words.words[self.topic_index.sample(rng)]
        }
    }

    fn text<R: Rng>(&self, rng: &mut R, len: usize) -> String {
        let tokens: Vec<&str> = (0..len).map(|_| self.token(rng)).collect();
        tokens.join(" ")
    }

    fn document<R: Rng>(&self, rng: &mut R, id: String, date: NaiveDate, category: &str) -> Document {
        let len = (self.length.sample(rng) as usize).max(1);
        Document {
            id,
            date,
            category: category.to_string(),
            title: self.text(rng, 5),
            body: self.text(rng, len),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TopicSwitch,
    CategorySplice,
}

/// Manifest of a generated benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedBenchmark {
    pub scheme: Scheme,
    pub true_changepoint: NaiveDate,
    pub interval: (NaiveDate, NaiveDate),
    pub per_day: usize,
    pub seed: u64,
    pub corpus_path: Option<PathBuf>,
    pub parameters: serde_json::Value,
}

impl InducedBenchmark {
    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_manifest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes `docs` as JSONL plus a sidecar manifest `<corpus>.manifest.json`.
pub fn write_benchmark(corpus_path: impl AsRef<Path>, docs: &[Document], bench: &mut InducedBenchmark) -> Result<PathBuf> {
    let corpus_path = corpus_path.as_ref();
    write_jsonl(corpus_path, docs)?;
    bench.corpus_path = Some(corpus_path.to_path_buf());
    let manifest = manifest_path(corpus_path);
    bench.write_manifest(&manifest)?;
    Ok(manifest)
}

pub fn manifest_path(corpus_path: &Path) -> PathBuf {
    let mut name = corpus_path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    corpus_path.with_file_name(name)
}

#[derive(Debug, Clone)]
pub struct TopicSwitch {
    pub topic_a: TopicSpec,
    pub topic_b: TopicSpec,
    pub background: WordDistribution,
    pub interval: (NaiveDate, NaiveDate),
    /// Last day of the `topic_a` regime.
    pub change_date: NaiveDate,
    pub per_day: usize,
    /// Calendar days generated on each side of the interval.
    pub margin_days: usize,
    /// Per-day count is drawn uniformly from `per_day ± jitter` (at least 1).
    pub jitter: usize,
    pub seed: u64,
}

fn day_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate_topic_switch(spec: &TopicSwitch) -> Result<(Vec<Document>, InducedBenchmark)> {
    let (start, end) = spec.interval;
    if start > end || spec.change_date < start || spec.change_date > end {
        return Err(Error::InvalidArgument(format!(
            "change date {} must lie in {start}..={end}",
            spec.change_date
        )));
    }
    if spec.per_day == 0 {
        return Err(Error::InvalidArgument("per-day count must be positive".into()));
    }
    let a = TokenSampler::new(&spec.topic_a, &spec.background)?;
    let b = TokenSampler::new(&spec.topic_b, &spec.background)?;
    let first = start - Duration::days(spec.margin_days as i64);
    let last = end + Duration::days(spec.margin_days as i64);
    let mut docs = Vec::new();
    for (offset, date) in first.iter_days().take_while(|d| *d <= last).enumerate() {
        let mut rng = day_rng(spec.seed, offset as u64);
        let jitter = spec.jitter as i64;
        let count = if jitter > 0 {
            (spec.per_day as i64 + rng.gen_range(-jitter..=jitter)).max(1) as usize
        } else {
            spec.per_day
        };
        let (sampler, topic) = if date <= spec.change_date {
            (&a, &spec.topic_a)
        } else {
            (&b, &spec.topic_b)
        };
        for i in 0..count {
            docs.push(sampler.document(&mut rng, format!("ts-{date}-{i:03}"), date, &topic.name));
        }
    }
    let bench = InducedBenchmark {
        scheme: Scheme::TopicSwitch,
        true_changepoint: spec.change_date,
        interval: spec.interval,
        per_day: spec.per_day,
        seed: spec.seed,
        corpus_path: None,
        parameters: serde_json::json!({
            "topic_a": spec.topic_a.name,
            "topic_b": spec.topic_b.name,
            "doc_length": [spec.topic_a.doc_length, spec.topic_b.doc_length],
            "background_mix": [spec.topic_a.background_mix, spec.topic_b.background_mix],
            "margin_days": spec.margin_days,
            "jitter": spec.jitter,
        }),
    };
    Ok((docs, bench))
}

/// A pseudo-category: each document picks one topic by weight.
#[derive(Debug, Clone)]
pub struct CategorySpec {
    pub name: String,
    pub topics: Vec<TopicSpec>,
    pub topic_weights: Vec<f64>,
}

/// Multi-category corpus with `per_day` documents per category per day.
pub fn generate_category_corpus(
    categories: &[CategorySpec],
    background: &WordDistribution,
    span: (NaiveDate, NaiveDate),
    per_day: usize,
    seed: u64,
) -> Result<Vec<Document>> {
    let mut samplers = Vec::new();
    for c in categories {
        let pick = WeightedIndex::new(&c.topic_weights)
            .map_err(|e| Error::InvalidArgument(format!("category `{}`: {e}", c.name)))?;
        let topics = c
            .topics
            .iter()
            .map(|t| TokenSampler::new(t, background))
            .collect::<Result<Vec<_>>>()?;
        samplers.push((c, pick, topics));
    }
    let mut docs = Vec::new();
    for (offset, date) in span.0.iter_days().take_while(|d| *d <= span.1).enumerate() {
        let mut rng = day_rng(seed, offset as u64);
        for (ci, (cat, pick, topics)) in samplers.iter().enumerate() {
            for i in 0..per_day {
                let t = pick.sample(&mut rng);
                docs.push(topics[t].document(&mut rng, format!("c{ci}-{date}-{i:03}"), date, &cat.name));
            }
        }
    }
    Ok(docs)
}

/// Keeps `category_a` up to and including `change_date` and `category_b`
/// afterwards, over the interval plus `margin` data-bearing dates per side.
/// Category labels are stripped from the output.
pub fn splice_categories(
    corpus: &CorpusIndex,
    category_a: &str,
    category_b: &str,
    change_date: NaiveDate,
    interval: (NaiveDate, NaiveDate),
    margin: usize,
    seed: u64,
) -> Result<(Vec<Document>, InducedBenchmark)> {
    let (start, end) = interval;
    if start > end || change_date < start || change_date > end {
        return Err(Error::InvalidArgument(format!(
            "change date {change_date} must lie in {start}..={end}"
        )));
    }
    let dates = corpus.date_grid();
    let lo = dates.partition_point(|d| *d < start);
    let hi = dates.partition_point(|d| *d <= end);
    if lo < margin {
        return Err(Error::InsufficientMargin {
            missing: margin - lo,
            side: "before",
        });
    }
    if dates.len() - hi < margin {
        return Err(Error::InsufficientMargin {
            missing: margin - (dates.len() - hi),
            side: "after",
        });
    }
    let mut out = Vec::new();
    for &date in &dates[lo - margin..hi + margin] {
        let required = if date <= change_date { category_a } else { category_b };
        let before = out.len();
        for &i in corpus.on_date(date) {
            let doc = &corpus.documents()[i];
            if doc.category == required {
                out.push(Document {
                    category: String::new(),
                    ..doc.clone()
                });
            }
        }
        if out.len() == before {
            return Err(Error::MissingCategory {
                date,
                category: required.to_string(),
            });
        }
    }
    let bench = InducedBenchmark {
        scheme: Scheme::CategorySplice,
        true_changepoint: change_date,
        interval,
        per_day: out.len() / (hi - lo + 2 * margin),
        seed,
        corpus_path: None,
        parameters: serde_json::json!({
            "category_a": category_a,
            "category_b": category_b,
            "margin": margin,
        }),
    };
    Ok((out, bench))
}

/// Permutes document contents across dates, keeping per-date counts.
pub fn shuffle_dates(corpus: &CorpusIndex, seed: u64) -> Result<CorpusIndex> {
    let docs = corpus.documents();
    let mut perm: Vec<usize> = (0..docs.len()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let shuffled = perm
        .iter()
        .zip(docs)
        .map(|(&src, slot)| Document {
            date: slot.date,
            ..docs[src].clone()
        })
        .collect();
    CorpusIndex::from_documents(shuffled)
}

/// Uniform change date in `[start, end)`, leaving at least one day of the
/// second regime inside the interval.
pub fn random_change_date(interval: (NaiveDate, NaiveDate), seed: u64) -> NaiveDate {
    let span = (interval.1 - interval.0).num_days().max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c4a9);
    interval.0 + Duration::days(rng.gen_range(0..span))
}
