//! Before/after segment pairs around each candidate date.

use chrono::NaiveDate;

use crate::corpus::{CandidateGrid, CorpusIndex};

/// The two segments around one candidate. The candidate's own date belongs
/// to `before`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPair {
    pub candidate: NaiveDate,
    pub before: Vec<NaiveDate>,
    pub after: Vec<NaiveDate>,
    pub before_docs: Vec<usize>,
    pub after_docs: Vec<usize>,
}

impl SegmentPair {
    /// Documents of segment `y` (0 = before, 1 = after).
    pub fn docs(&self, y: u8) -> &[usize] {
        if y == 0 {
            &self.before_docs
        } else {
            &self.after_docs
        }
    }
}

fn docs_on(corpus: &CorpusIndex, dates: &[NaiveDate]) -> Vec<usize> {
    dates
        .iter()
        .flat_map(|d| corpus.on_date(*d).iter().copied())
        .collect()
}

pub fn segments(grid: &CandidateGrid, corpus: &CorpusIndex) -> Vec<SegmentPair> {
    let full = grid.full_grid();
    let l = grid.margin();
    (0..grid.candidates().len())
        .map(|k| {
            let pos = grid.grid_position(k);
            let before = full[pos + 1 - l..=pos].to_vec();
            let after = full[pos + 1..=pos + l].to_vec();
            SegmentPair {
                candidate: full[pos],
                before_docs: docs_on(corpus, &before),
                after_docs: docs_on(corpus, &after),
                before,
                after,
            }
        })
        .collect()
}
