use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::windows::SegmentPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
}

/// Label of one document inside one task (0 = before, 1 = after).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub task: u32,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutEntry {
    /// Feature-matrix row of the document.
    pub row: usize,
    pub split: Split,
    pub memberships: Vec<Membership>,
}

/// Per-task labels and the shared train/validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskLayout {
    candidates: Vec<NaiveDate>,
    entries: Vec<LayoutEntry>,
}

/// Rows of one head: `(feature row, label)`.
pub type HeadRows = Vec<(usize, u8)>;

impl TaskLayout {
    /// Validates that every task has validation documents in both classes.
    pub fn new(candidates: Vec<NaiveDate>, entries: Vec<LayoutEntry>) -> Result<Self> {
        for e in &entries {
            if let Some(m) = e.memberships.iter().find(|m| m.task as usize >= candidates.len() || m.label > 1) {
                return Err(Error::InvalidArgument(format!(
                    "row {}: invalid membership task {} label {}",
                    e.row, m.task, m.label
                )));
            }
        }
        let layout = Self {
            candidates,
            entries,
        };
        for (k, sizes) in layout.class_sizes(Split::Val).iter().enumerate() {
            for class in 0..2u8 {
                if sizes[class as usize] == 0 {
                    return Err(Error::EmptyValidationClass {
                        candidate: layout.candidates[k],
                        class,
                    });
                }
            }
        }
        Ok(layout)
    }

    pub fn candidates(&self) -> &[NaiveDate] {
        &self.candidates
    }

    pub fn tasks(&self) -> usize {
        self.candidates.len()
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    /// `[|D_0|, |D_1|]` per task restricted to one split.
    pub fn class_sizes(&self, split: Split) -> Vec<[usize; 2]> {
        let mut sizes = vec![[0usize; 2]; self.candidates.len()];
        for e in self.entries.iter().filter(|e| e.split == split) {
            for m in &e.memberships {
                sizes[m.task as usize][m.label as usize] += 1;
            }
        }
        sizes
    }

    /// Inverted index: rows of each head within one split, in entry order.
    pub fn head_rows(&self, split: Split) -> Vec<HeadRows> {
        let mut heads = vec![Vec::new(); self.candidates.len()];
        for e in self.entries.iter().filter(|e| e.split == split) {
            for m in &e.memberships {
                heads[m.task as usize].push((e.row, m.label));
            }
        }
        heads
    }
}

/// Number of validation documents for a date holding `n` documents.
pub fn validation_count(n: usize) -> usize {
    ((n + 2) / 5).max(1).min(n)
}

/// Labels every window document per task and splits each date 80/20 once,
/// reusing the split for all tasks.
pub fn build_tasks(pairs: &[SegmentPair], corpus: &CorpusIndex, split_seed: u64) -> Result<TaskLayout> {
    let mut memberships: BTreeMap<usize, Vec<Membership>> = BTreeMap::new();
    for (k, pair) in pairs.iter().enumerate() {
        for y in 0..2u8 {
            for &doc in pair.docs(y) {
                memberships.entry(doc).or_default().push(Membership {
                    task: k as u32,
                    label: y,
                });
            }
        }
    }

    let mut dates: Vec<NaiveDate> = pairs
        .iter()
        .flat_map(|p| p.before.iter().chain(&p.after).copied())
        .collect();
    dates.sort_unstable();
    dates.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    let mut entries = Vec::with_capacity(memberships.len());
    for date in dates {
        let mut docs = corpus.on_date(date).to_vec();
        docs.shuffle(&mut rng);
        let n_val = validation_count(docs.len());
        for (i, doc) in docs.into_iter().enumerate() {
            if let Some(m) = memberships.remove(&doc) {
                entries.push(LayoutEntry {
                    row: doc,
                    split: if i < n_val { Split::Val } else { Split::Train },
                    memberships: m,
                });
            }
        }
    }
    entries.sort_by_key(|e| e.row);
    TaskLayout::new(pairs.iter().map(|p| p.candidate).collect(), entries)
}
