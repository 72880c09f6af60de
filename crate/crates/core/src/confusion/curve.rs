use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Confusion,
    Lda,
    Random,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Confusion => "confusion",
            Method::Lda => "lda",
            Method::Random => "random",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "confusion" => Ok(Method::Confusion),
            "lda" => Ok(Method::Lda),
            "random" => Ok(Method::Random),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub date: NaiveDate,
    pub value: f64,
    pub raw: f64,
}

/// Dissimilarity value per candidate date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorCurve {
    pub method: Method,
    pub points: Vec<CurvePoint>,
    pub window_l: usize,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "method,candidate_date,value,raw_value,L,seed";

impl IndicatorCurve {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn value_at(&self, date: NaiveDate) -> Option<f64> {
        self.points.iter().find(|p| p.date == date).map(|p| p.value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.method, p.date, p.value, p.raw, self.window_l, self.seed
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses the output of [`to_csv`](Self::to_csv). Leading `#` lines are
    /// skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().skip_while(|(_, l)| l.starts_with('#'));
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            other => {
                return Err(Error::MalformedRecord {
                    line: other.map_or(1, |(n, _)| n + 1),
                    message: format!("expected header `{CSV_HEADER}`"),
                })
            }
        }
        let mut curve: Option<IndicatorCurve> = None;
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::MalformedRecord { line: n + 1, message };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad(format!("expected 6 columns, found {}", cols.len())));
            }
            let method: Method = cols[0].parse().map_err(|e: Error| bad(e.to_string()))?;
            let date = NaiveDate::parse_from_str(cols[1], "%Y-%m-%d").map_err(|e| bad(e.to_string()))?;
            let value: f64 = cols[2].parse().map_err(|_| bad("bad value".into()))?;
            let raw: f64 = cols[3].parse().map_err(|_| bad("bad raw_value".into()))?;
            let window_l: usize = cols[4].parse().map_err(|_| bad("bad L".into()))?;
            let seed: u64 = cols[5].parse().map_err(|_| bad("bad seed".into()))?;
            let c = curve.get_or_insert_with(|| IndicatorCurve {
                method,
                points: Vec::new(),
                window_l,
                seed,
            });
            c.points.push(CurvePoint { date, value, raw });
        }
        curve.ok_or_else(|| Error::InvalidArgument("curve file has no points".into()))
    }
}

/// Global maximum of the curve; ties go to the earliest date.
pub fn predict_changepoint(curve: &IndicatorCurve) -> Option<NaiveDate> {
    let mut best: Option<&CurvePoint> = None;
    for p in &curve.points {
        if best.map_or(true, |b| p.value > b.value) {
            best = Some(p);
        }
    }
    best.map(|p| p.date)
}
