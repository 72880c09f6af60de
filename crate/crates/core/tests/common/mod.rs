#![allow(dead_code)]

use chrono::{Duration, NaiveDate};
use tvcpd_core::benchgen::{
    default_background, disjoint_topic, generate_category_corpus, generate_topic_switch, random_change_date,
    splice_categories, CategorySpec, InducedBenchmark, TopicSwitch,
};
use tvcpd_core::CorpusIndex;

pub fn d(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub const BG_SIZE: usize = 100;
pub const TOPIC_SIZE: usize = 60;
pub const DOC_LENGTH: f64 = 40.0;

/// Benchmark-1 style topic switch over a 30-day interval with 8 margin days.
pub fn topic_switch(bench: u64, same_topic: bool) -> (CorpusIndex, InducedBenchmark) {
    topic_switch_sized(bench, same_topic, 10)
}

pub fn topic_switch_sized(bench: u64, same_topic: bool, per_day: usize) -> (CorpusIndex, InducedBenchmark) {
    let interval = (d("2021-03-01"), d("2021-03-30"));
    let a = 2 * bench as usize;
    let b = if same_topic { a } else { a + 1 };
    let spec = TopicSwitch {
        topic_a: disjoint_topic(a, TOPIC_SIZE, DOC_LENGTH, 0.5),
        topic_b: disjoint_topic(b, TOPIC_SIZE, DOC_LENGTH, 0.5),
        background: default_background(BG_SIZE),
        interval,
        change_date: random_change_date(interval, 1000 + bench),
        per_day,
        margin_days: 8,
        jitter: 0,
        seed: bench,
    };
    let (docs, meta) = generate_topic_switch(&spec).unwrap();
    (CorpusIndex::from_documents(docs).unwrap(), meta)
}

/// Two pseudo-categories over one year plus margins, spliced at a random date.
pub fn category_splice(seed: u64, margin: usize) -> (CorpusIndex, InducedBenchmark) {
    let interval = (d("2015-01-01"), d("2015-12-31"));
    let span = (
        interval.0 - Duration::days(margin as i64),
        interval.1 + Duration::days(margin as i64),
    );
    let topics: Vec<_> = (0..4).map(|i| disjoint_topic(i, TOPIC_SIZE, DOC_LENGTH, 0.5)).collect();
    let cats = [
        CategorySpec {
            name: "uk-news".into(),
            topics: vec![topics[0].clone(), topics[1].clone(), topics[2].clone()],
            topic_weights: vec![0.5, 0.3, 0.2],
        },
        CategorySpec {
            name: "us-news".into(),
            topics: vec![topics[1].clone(), topics[2].clone(), topics[3].clone()],
            topic_weights: vec![0.2, 0.3, 0.5],
        },
    ];
    let docs = generate_category_corpus(&cats, &default_background(BG_SIZE), span, 5, seed).unwrap();
    let corpus = CorpusIndex::from_documents(docs).unwrap();
    let change = random_change_date(interval, 77 + seed);
    let (docs, meta) = splice_categories(&corpus, "uk-news", "us-news", change, interval, margin, seed).unwrap();
    (CorpusIndex::from_documents(docs).unwrap(), meta)
}
