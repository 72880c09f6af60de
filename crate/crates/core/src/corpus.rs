//! Dated document ingestion, indexing and candidate grids.
//!
//! Records are JSON lines with the fields `id`, `date` (`YYYY-MM-DD`),
//! `category`, `title` and `body`, in that order.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dated text item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    pub date: NaiveDate,
    pub category: String,
    pub title: String,
    pub body: String,
}

impl Document {
    /// Title and body joined into the analyzed content.
    pub fn text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.body.len() + 1);
        s.push_str(&self.title);
        s.push(' ');
        s.push_str(&self.body);
        s
    }

    pub fn body_word_count(&self) -> usize {
        self.body.split_whitespace().count()
    }
}

/// Ingest-time filters. An empty category list admits every category.
#[derive(Debug, Clone, Default)]
pub struct Filters {
    pub min_words: usize,
    pub categories: Vec<String>,
}

impl Filters {
    pub fn admits(&self, doc: &Document) -> bool {
        doc.body_word_count() >= self.min_words
            && (self.categories.is_empty() || self.categories.iter().any(|c| c == &doc.category))
    }
}

/// Immutable date-indexed corpus.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    documents: Vec<Document>,
    by_date: BTreeMap<NaiveDate, Vec<usize>>,
    date_grid: Vec<NaiveDate>,
}

impl CorpusIndex {
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::with_capacity(documents.len());
        let mut by_date: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
        for (i, doc) in documents.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "document at position {i} has an empty id"
                )));
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            by_date.entry(doc.date).or_default().push(i);
        }
        let date_grid = by_date.keys().copied().collect();
        Ok(Self {
            documents,
            by_date,
            date_grid,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Sorted dates having at least one document.
    pub fn date_grid(&self) -> &[NaiveDate] {
        &self.date_grid
    }

    /// Document indices published on `date` (empty if none).
    pub fn on_date(&self, date: NaiveDate) -> &[usize] {
        self.by_date.get(&date).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn by_date(&self) -> &BTreeMap<NaiveDate, Vec<usize>> {
        &self.by_date
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }
}

/// Parses one JSONL record; `line` is 1-based and only used for errors.
pub fn parse_record(raw: &str, line: usize) -> Result<Document> {
    serde_json::from_str(raw).map_err(|e| Error::MalformedRecord {
        line,
        message: e.to_string(),
    })
}

pub fn ingest(path: impl AsRef<Path>, filters: &Filters) -> Result<CorpusIndex> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_record(&line, n + 1)?;
        if filters.admits(&doc) {
            docs.push(doc);
        }
    }
    CorpusIndex::from_documents(docs)
}

pub fn write_jsonl<'a, I>(path: impl AsRef<Path>, docs: I) -> Result<()>
where
    I: IntoIterator<Item = &'a Document>,
{
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn export(path: impl AsRef<Path>, corpus: &CorpusIndex) -> Result<()> {
    write_jsonl(path, corpus.documents())
}

/// Candidate dates `T*` plus `margin` data-bearing dates on each side (`T`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateGrid {
    candidates: Vec<NaiveDate>,
    margin: usize,
    full_grid: Vec<NaiveDate>,
}

impl CandidateGrid {
    pub fn candidates(&self) -> &[NaiveDate] {
        &self.candidates
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn full_grid(&self) -> &[NaiveDate] {
        &self.full_grid
    }

    /// Position of the `k`-th candidate inside the full grid.
    pub fn grid_position(&self, k: usize) -> usize {
        self.margin + k
    }
}

pub fn build_candidate_grid(
    corpus: &CorpusIndex,
    interval: (NaiveDate, NaiveDate),
    margin: usize,
) -> Result<CandidateGrid> {
    let (start, end) = interval;
    if margin < 1 {
        return Err(Error::InvalidArgument("L must be at least 1".into()));
    }
    if start > end {
        return Err(Error::InvalidArgument(format!(
            "interval start {start} is after end {end}"
        )));
    }
    let dates = corpus.date_grid();
    let lo = dates.partition_point(|d| *d < start);
    let hi = dates.partition_point(|d| *d <= end);
    if lo == hi {
        return Err(Error::InvalidArgument(format!(
            "no data-bearing dates in {start}..={end}"
        )));
    }
    if lo < margin {
        return Err(Error::InsufficientMargin {
            missing: margin - lo,
            side: "before",
        });
    }
    let after = dates.len() - hi;
    if after < margin {
        return Err(Error::InsufficientMargin {
            missing: margin - after,
            side: "after",
        });
    }
    Ok(CandidateGrid {
        candidates: dates[lo..hi].to_vec(),
        margin,
        full_grid: dates[lo - margin..hi + margin].to_vec(),
    })
}
