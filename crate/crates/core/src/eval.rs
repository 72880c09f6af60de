//! Scoring predicted changepoints against event dates.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::CandidateGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub date: NaiveDate,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventList {
    events: Vec<Event>,
    interval: (NaiveDate, NaiveDate),
}

impl EventList {
    pub fn new(mut events: Vec<Event>, interval: (NaiveDate, NaiveDate)) -> Result<Self> {
        if interval.0 > interval.1 {
            return Err(Error::InvalidArgument("event interval start after end".into()));
        }
        if let Some(e) = events.iter().find(|e| e.date < interval.0 || e.date > interval.1) {
            return Err(Error::InvalidArgument(format!(
                "event `{}` on {} lies outside {}..={}",
                e.label, e.date, interval.0, interval.1
            )));
        }
        events.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.label.cmp(&b.label)));
        Ok(Self { events, interval })
    }

    /// A single unlabeled event, as for induced benchmarks.
    pub fn single(date: NaiveDate, interval: (NaiveDate, NaiveDate)) -> Result<Self> {
        Self::new(
            vec![Event {
                date,
                label: "induced".into(),
            }],
            interval,
        )
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn interval(&self) -> (NaiveDate, NaiveDate) {
        self.interval
    }

    /// Calendar days in the interval, both ends included.
    pub fn interval_days(&self) -> usize {
        ((self.interval.1 - self.interval.0).num_days() + 1) as usize
    }

    /// Parses `date,label` CSV with a header row.
    pub fn from_csv(text: &str, interval: (NaiveDate, NaiveDate)) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::MalformedRecord {
            line: 1,
            message: e.to_string(),
        })?;
        if headers.iter().collect::<Vec<_>>() != ["date", "label"] {
            return Err(Error::MalformedRecord {
                line: 1,
                message: "expected header `date,label`".into(),
            });
        }
        let mut events = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::MalformedRecord {
                line,
                message: e.to_string(),
            })?;
            let date = NaiveDate::parse_from_str(rec.get(0).unwrap_or(""), "%Y-%m-%d").map_err(|e| {
                Error::MalformedRecord {
                    line,
                    message: e.to_string(),
                }
            })?;
            events.push(Event {
                date,
                label: rec.get(1).unwrap_or("").to_string(),
            });
        }
        Self::new(events, interval)
    }

    pub fn read_csv(path: impl AsRef<Path>, interval: (NaiveDate, NaiveDate)) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, interval)
    }
}

/// Days between `predicted` and the closest event.
pub fn delta_days(predicted: NaiveDate, events: &EventList) -> Result<i64> {
    events
        .events()
        .iter()
        .map(|e| (predicted - e.date).num_days().abs())
        .min()
        .ok_or(Error::NoEvents)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    /// `(n / interval_days, fraction of runs with Δ ≤ n)` for `n = 0..=interval_days`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Trapezoidal area under a curve sampled at `(x, y)` points.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum()
}

/// Success rate at every integer threshold and its normalized AUC.
pub fn success_curve(deltas: &[i64], interval_days: usize) -> Result<SuccessCurve> {
    if interval_days == 0 {
        return Err(Error::InvalidArgument("interval must span at least one day".into()));
    }
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("no runs to score".into()));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_unstable();
    let runs = sorted.len() as f64;
    let points: Vec<(f64, f64)> = (0..=interval_days)
        .map(|n| {
            let hits = sorted.partition_point(|&d| d <= n as i64);
            (n as f64 / interval_days as f64, hits as f64 / runs)
        })
        .collect();
    let auc = trapezoid(&points);
    Ok(SuccessCurve { points, auc })
}

pub fn success_curve_from_runs(runs: &[(NaiveDate, &EventList)], interval_days: usize) -> Result<SuccessCurve> {
    let deltas = runs
        .iter()
        .map(|(p, ev)| delta_days(*p, ev))
        .collect::<Result<Vec<_>>>()?;
    success_curve(&deltas, interval_days)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub delta_sum: i64,
    pub candidates: usize,
    pub mean_delta: f64,
    pub curve: SuccessCurve,
}

/// Scores every candidate as if it were the prediction and averages.
pub fn random_baseline(grid: &CandidateGrid, events: &EventList) -> Result<RandomBaseline> {
    random_baseline_over(grid.candidates(), events)
}

pub fn random_baseline_over(candidates: &[NaiveDate], events: &EventList) -> Result<RandomBaseline> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates".into()));
    }
    let deltas = candidates
        .iter()
        .map(|&c| delta_days(c, events))
        .collect::<Result<Vec<_>>>()?;
    let sum: i64 = deltas.iter().sum();
    Ok(RandomBaseline {
        delta_sum: sum,
        candidates: deltas.len(),
        mean_delta: sum as f64 / deltas.len() as f64,
        curve: success_curve(&deltas, events.interval_days())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub predicted: NaiveDate,
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub runs: Vec<RunRecord>,
    pub mean_delta: f64,
    /// Sample standard deviation over `√runs`; 0 for a single run.
    pub se_delta: f64,
    pub single_run: bool,
    pub success_curve: SuccessCurve,
    pub auc: f64,
}

pub fn aggregate(runs: Vec<RunRecord>, interval_days: usize) -> Result<EvalReport> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("no runs to aggregate".into()));
    }
    let deltas: Vec<i64> = runs.iter().map(|r| r.delta).collect();
    let n = deltas.len() as f64;
    let mean = deltas.iter().sum::<i64>() as f64 / n;
    let se = if deltas.len() > 1 {
        let var = deltas.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let curve = success_curve(&deltas, interval_days)?;
    Ok(EvalReport {
        single_run: runs.len() == 1,
        runs,
        mean_delta: mean,
        se_delta: se,
        auc: curve.auc,
        success_curve: curve,
    })
}

impl EvalReport {
    pub fn runs_csv(&self) -> String {
        let mut out = String::from("dataset,method,seed,predicted,delta\n");
        for r in &self.runs {
            out.push_str(&format!("{},{},{},{},{}\n", r.dataset, r.method, r.seed, r.predicted, r.delta));
        }
        out
    }
}
