use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use tvcpd_core::benchgen::{
    default_background, disjoint_topic, generate_category_corpus, generate_topic_switch, manifest_path,
    random_change_date, splice_categories, write_benchmark, CategorySpec, InducedBenchmark, Scheme, TopicSwitch,
};
use tvcpd_core::confusion::IndicatorCurve;
use tvcpd_core::corpus::{ingest, Filters};
use tvcpd_core::detect::{build_features, prepare, random_curve, run_confusion, run_lda, FeatureSource};
use tvcpd_core::eval::{aggregate, delta_days, random_baseline, random_baseline_over, EvalReport, EventList, RandomBaseline, RunRecord};
use tvcpd_core::guardian::GuardianClient;
use tvcpd_core::{CorpusIndex, Method};

use crate::config::{ConfigError, FeatureKind, RunConfig, Seeds};

pub const BENCHMARK_FILE: &str = "benchmark.jsonl";
pub const REPORT_FILE: &str = "eval_report.json";
pub const RUNS_FILE: &str = "eval_runs.csv";

fn missing(field: &str) -> anyhow::Error {
    ConfigError(format!("{field}: required but not set")).into()
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

fn preamble(cfg: &RunConfig) -> String {
    format!(
        "# config_hash={}\n# seed_data={} seed_split={} seed_train={}\n",
        cfg.hash(),
        cfg.seeds.data,
        cfg.seeds.split,
        cfg.seeds.train
    )
}

pub fn fetch(cfg: &RunConfig) -> Result<usize> {
    let section = cfg.fetch.section.as_deref().ok_or_else(|| missing("fetch.section"))?;
    let [from, to] = cfg.data.interval.ok_or_else(|| missing("data.interval"))?;
    let out = cfg
        .fetch
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join(format!("{section}.jsonl")));
    let mut client = GuardianClient::from_env()?;
    client.page_size = cfg.fetch.page_size;
    client.cache_dir = cfg.fetch.cache_dir.clone();
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let n = client
        .fetch(section, (from, to), &out)
        .with_context(|| format!("fetching section `{section}`"))?;
    println!("fetched {n} articles into {}", out.display());
    Ok(n)
}

fn two_categories(cfg: &RunConfig) -> Vec<CategorySpec> {
    let b = &cfg.benchgen;
    let topics: Vec<_> = (0..4)
        .map(|i| disjoint_topic(i, b.topic_vocab, b.doc_length, b.background_mix))
        .collect();
    vec![
        CategorySpec {
            name: "category-a".into(),
            topics: topics[..3].to_vec(),
            topic_weights: vec![0.5, 0.3, 0.2],
        },
        CategorySpec {
            name: "category-b".into(),
            topics: topics[1..].to_vec(),
            topic_weights: vec![0.2, 0.3, 0.5],
        },
    ]
}

pub fn benchgen(cfg: &RunConfig) -> Result<(PathBuf, InducedBenchmark)> {
    let b = &cfg.benchgen;
    let margin = b.margin_days.unwrap_or(cfg.detect.window_l);
    let seed = cfg.seeds.data;
    let background = default_background(b.background_vocab);
    let (docs, mut bench) = match b.scheme {
        Scheme::TopicSwitch => {
            let [start, end] = b
                .interval
                .unwrap_or([NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(), NaiveDate::from_ymd_opt(2021, 3, 30).unwrap()]);
            let second = if b.same_topic { 0 } else { 1 };
            let spec = TopicSwitch {
                topic_a: disjoint_topic(0, b.topic_vocab, b.doc_length, b.background_mix),
                topic_b: disjoint_topic(second, b.topic_vocab, b.doc_length, b.background_mix),
                background,
                interval: (start, end),
                change_date: b.change_date.unwrap_or_else(|| random_change_date((start, end), seed)),
                per_day: b.per_day,
                margin_days: margin,
                jitter: b.jitter,
                seed,
            };
            generate_topic_switch(&spec)?
        }
        Scheme::CategorySplice => {
            let [start, end] = b
                .interval
                .unwrap_or([NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2015, 12, 31).unwrap()]);
            let span = (start - Duration::days(margin as i64), end + Duration::days(margin as i64));
            let full = generate_category_corpus(&two_categories(cfg), &background, span, b.per_day, seed)?;
            let corpus = CorpusIndex::from_documents(full)?;
            let change = b.change_date.unwrap_or_else(|| random_change_date((start, end), seed));
            splice_categories(&corpus, "category-a", "category-b", change, (start, end), margin, seed)?
        }
    };
    if let serde_json::Value::Object(map) = &mut bench.parameters {
        map.insert("config_hash".into(), cfg.hash().into());
        map.insert("seeds".into(), serde_json::to_value(cfg.seeds)?);
    }
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(BENCHMARK_FILE);
    write_benchmark(&path, &docs, &mut bench)?;
    bench.corpus_path = Some(PathBuf::from(BENCHMARK_FILE));
    bench.write_manifest(manifest_path(&path))?;
    println!(
        "wrote {} documents to {} (changepoint {})",
        docs.len(),
        path.display(),
        bench.true_changepoint
    );
    Ok((path, bench))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub dataset: String,
    pub method: Method,
    pub predicted: Option<NaiveDate>,
    pub interval: [NaiveDate; 2],
    pub window_l: usize,
    pub candidates: Vec<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub training: Option<TrainingSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub random_baseline: Option<BaselineSummary>,
    pub config_hash: String,
    pub seeds: Seeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub mean_delta: f64,
    pub delta_sum: i64,
    pub candidates: usize,
    pub auc: f64,
}

impl From<&RandomBaseline> for BaselineSummary {
    fn from(b: &RandomBaseline) -> Self {
        Self {
            mean_delta: b.mean_delta,
            delta_sum: b.delta_sum,
            candidates: b.candidates,
            auc: b.curve.auc,
        }
    }
}

fn read_manifest_for(corpus: &Path) -> Result<Option<InducedBenchmark>> {
    let path = manifest_path(corpus);
    if path.exists() {
        Ok(Some(InducedBenchmark::read_manifest(&path)?))
    } else {
        Ok(None)
    }
}

/// Events from a `date,label` CSV or a benchmark manifest.
fn load_events(path: &Path, interval: [NaiveDate; 2]) -> Result<EventList> {
    let interval = (interval[0], interval[1]);
    if path.to_string_lossy().ends_with(".manifest.json") {
        let m = InducedBenchmark::read_manifest(path)?;
        Ok(EventList::single(m.true_changepoint, interval)?)
    } else {
        Ok(EventList::read_csv(path, interval).with_context(|| format!("reading events {}", path.display()))?)
    }
}

pub fn curve_path(out_dir: &Path, method: Method) -> PathBuf {
    out_dir.join(format!("curve_{method}.csv"))
}

pub fn prediction_path(out_dir: &Path, method: Method) -> PathBuf {
    out_dir.join(format!("changepoint_{method}.json"))
}

pub fn detect(cfg: &RunConfig, corpus_path: &Path, filtered: bool) -> Result<Prediction> {
    let filters = if filtered {
        Filters {
            min_words: cfg.data.min_words,
            categories: cfg.data.categories.clone(),
        }
    } else {
        Filters::default()
    };
    let corpus = ingest(corpus_path, &filters).with_context(|| format!("ingesting {}", corpus_path.display()))?;
    let manifest = read_manifest_for(corpus_path)?;
    let interval = cfg
        .data
        .interval
        .or(manifest.as_ref().map(|m| [m.interval.0, m.interval.1]))
        .ok_or_else(|| missing("data.interval"))?;
    let l = cfg.detect.window_l;
    let prep = prepare(&corpus, (interval[0], interval[1]), l).context("building the candidate grid")?;
    let events = match (&cfg.data.events, &manifest) {
        (Some(p), _) => Some(load_events(p, interval)?),
        (None, Some(m)) => Some(EventList::single(m.true_changepoint, (interval[0], interval[1]))?),
        (None, None) => None,
    };

    let method = cfg.detect.method;
    let mut training = None;
    let mut baseline = None;
    let (curve, predicted): (IndicatorCurve, Option<NaiveDate>) = match method {
        Method::Confusion => {
            let source = match cfg.detect.features {
                FeatureKind::Tfidf => FeatureSource::Tfidf {
                    min_df: cfg.detect.min_df,
                    max_df: cfg.detect.max_df,
                },
                FeatureKind::Embeddings => FeatureSource::Embeddings {
                    path: cfg.detect.embeddings.clone().ok_or_else(|| missing("detect.embeddings"))?,
                },
            };
            let features = build_features(&prep, &source)?;
            let run = run_confusion(&prep, &features, cfg.seeds.split, &cfg.train_config())?;
            training = Some(TrainingSummary {
                best_epoch: run.best_epoch,
                epochs_run: run.epochs_run,
                best_val_loss: run.best_val_loss,
            });
            (run.curve, run.predicted)
        }
        Method::Lda => {
            let run = run_lda(&prep, cfg.detect.min_df, cfg.detect.max_df, &cfg.lda_config())?;
            (run.curve, run.predicted)
        }
        Method::Random => {
            if let Some(ev) = &events {
                baseline = Some(BaselineSummary::from(&random_baseline(&prep.grid, ev)?));
            }
            (random_curve(&prep.grid, cfg.seeds.train), None)
        }
    };

    fs::create_dir_all(&cfg.out_dir)?;
    write(&curve_path(&cfg.out_dir, method), preamble(cfg) + &curve.to_csv())?;
    let prediction = Prediction {
        dataset: corpus_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        method,
        predicted,
        interval,
        window_l: l,
        candidates: prep.grid.candidates().to_vec(),
        training,
        random_baseline: baseline,
        config_hash: cfg.hash(),
        seeds: cfg.seeds,
    };
    write_json(&prediction_path(&cfg.out_dir, method), &prediction)?;
    match (predicted, &prediction.random_baseline) {
        (Some(d), _) => println!("{method}: predicted changepoint {d}"),
        (None, Some(b)) => println!("{method}: random-choice mean delta {:.3} days", b.mean_delta),
        (None, None) => println!("{method}: uniform curve over {} candidates", prediction.candidates.len()),
    }
    Ok(prediction)
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub interval: [NaiveDate; 2],
    pub interval_days: usize,
    pub methods: BTreeMap<String, EvalReport>,
    pub random_baseline: BaselineSummary,
    pub config_hash: String,
    pub seeds: Seeds,
}

pub fn eval(cfg: &RunConfig, predictions: &[PathBuf], events_path: Option<&Path>) -> Result<Report> {
    if predictions.is_empty() {
        bail!(ConfigError("eval: at least one prediction file is required".into()));
    }
    let preds = predictions
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Prediction>(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let interval = preds[0].interval;
    if preds.iter().any(|p| p.interval != interval) {
        bail!("prediction files cover different intervals");
    }
    let events_path = events_path
        .map(Path::to_path_buf)
        .or_else(|| cfg.data.events.clone())
        .ok_or_else(|| missing("data.events"))?;
    let events = load_events(&events_path, interval)?;
    let days = events.interval_days();

    let mut by_method: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    for p in &preds {
        let Some(date) = p.predicted else { continue };
        by_method.entry(p.method.to_string()).or_default().push(RunRecord {
            dataset: p.dataset.clone(),
            method: p.method.to_string(),
            seed: p.seeds.train,
            predicted: date,
            delta: delta_days(date, &events)?,
        });
    }
    let mut methods = BTreeMap::new();
    let mut runs_csv = preamble(cfg);
    let mut header = true;
    for (name, runs) in by_method {
        let report = aggregate(runs, days)?;
        let csv = report.runs_csv();
        runs_csv.push_str(if header { &csv } else { csv.split_once('\n').map_or("", |x| x.1) });
        header = false;
        methods.insert(name, report);
    }

    let baseline = BaselineSummary::from(&random_baseline_over(&preds[0].candidates, &events)?);
    let report = Report {
        interval,
        interval_days: days,
        methods,
        random_baseline: baseline,
        config_hash: cfg.hash(),
        seeds: cfg.seeds,
    };
    fs::create_dir_all(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join(REPORT_FILE), &report)?;
    write(&cfg.out_dir.join(RUNS_FILE), runs_csv)?;
    for (name, r) in &report.methods {
        println!("{name}: mean delta {:.3} days (se {:.3}), auc {:.3}", r.mean_delta, r.se_delta, r.auc);
    }
    println!("random choice: mean delta {:.3} days", report.random_baseline.mean_delta);
    Ok(report)
}

pub fn pipeline(cfg: &RunConfig) -> Result<Report> {
    let (corpus, _) = benchgen(cfg)?;
    detect(cfg, &corpus, false)?;
    let prediction = prediction_path(&cfg.out_dir, cfg.detect.method);
    eval(cfg, &[prediction], Some(&manifest_path(&corpus)))
}
