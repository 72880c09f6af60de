use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;

use super::{FeatureKind, FeatureMatrix};
use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};

/// Lowercased alphanumeric runs of at least two characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    total_documents: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn document_frequency(&self, column: usize) -> usize {
        self.document_frequency[column]
    }

    pub fn total_documents(&self) -> usize {
        self.total_documents
    }

    /// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
    pub fn idf(&self, column: usize) -> f64 {
        let n = self.total_documents as f64;
        let df = self.document_frequency[column] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    /// In-vocabulary column ids of a text, in token order.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        tokenize(text).filter_map(|t| self.index_of(&t)).collect()
    }
}

/// Keeps terms whose document frequency lies in `[min_df, max_df * N]`.
pub fn fit_vocabulary(corpus: &CorpusIndex, min_df: usize, max_df: f64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus.documents() {
        let unique: HashSet<String> = tokenize(&doc.text()).collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n = corpus.len();
    let ceiling = max_df * n as f64;
    let mut terms = Vec::new();
    let mut document_frequency = Vec::new();
    for (term, count) in df {
        if count >= min_df && count as f64 <= ceiling {
            terms.push(term);
            document_frequency.push(count);
        }
    }
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary {
        terms,
        index,
        document_frequency,
        total_documents: n,
    })
}

#[derive(Debug, Clone)]
pub struct TfidfOutput {
    pub features: FeatureMatrix,
    /// Rows with no in-vocabulary term; left as zero vectors.
    pub empty_rows: Vec<usize>,
}

pub fn tfidf_transform(corpus: &CorpusIndex, vocab: &Vocabulary) -> Result<TfidfOutput> {
    let rows: Vec<Vec<(u32, f64)>> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for col in vocab.encode(&doc.text()) {
                *counts.entry(col).or_insert(0) += 1;
            }
            let mut row: Vec<(u32, f64)> = counts
                .into_iter()
                .map(|(col, tf)| (col as u32, tf as f64 * vocab.idf(col)))
                .collect();
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
            row
        })
        .collect();
    let empty_rows = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_empty())
        .map(|(i, _)| i)
        .collect();
    let features = FeatureMatrix::sparse(FeatureKind::Tfidf, vocab.len(), rows)?;
    Ok(TfidfOutput {
        features,
        empty_rows,
    })
}
