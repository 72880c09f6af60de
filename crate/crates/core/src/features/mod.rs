//! Numeric document representations.

mod emb1;
mod tfidf;

pub use emb1::{load_embeddings, parse_emb1, write_emb1, EmbeddingRecord};
pub use tfidf::{fit_vocabulary, tfidf_transform, tokenize, TfidfOutput, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Tfidf,
    Embedding,
    OneHot,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    Sparse {
        indptr: Vec<usize>,
        indices: Vec<u32>,
        values: Vec<f64>,
    },
}

/// One feature vector per document, aligned to corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    kind: FeatureKind,
    dim: usize,
    rows: usize,
    storage: Storage,
}

/// Borrowed view of a single row.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [u32], &'a [f64]),
}

impl Row<'_> {
    #[inline]
    pub fn dot(&self, w: &[f64]) -> f64 {
        match *self {
            Row::Dense(x) => x.iter().zip(w).map(|(a, b)| a * b).sum(),
            Row::Sparse(idx, val) => idx
                .iter()
                .zip(val)
                .map(|(&j, &v)| v * w[j as usize])
                .sum(),
        }
    }

    /// `out += a * row`
    #[inline]
    pub fn axpy(&self, a: f64, out: &mut [f64]) {
        match *self {
            Row::Dense(x) => out.iter_mut().zip(x).for_each(|(o, &v)| *o += a * v),
            Row::Sparse(idx, val) => {
                for (&j, &v) in idx.iter().zip(val) {
                    out[j as usize] += a * v;
                }
            }
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.axpy(1.0, &mut out);
        out
    }

    pub fn norm(&self) -> f64 {
        let sq: f64 = match *self {
            Row::Dense(x) => x.iter().map(|v| v * v).sum(),
            Row::Sparse(_, val) => val.iter().map(|v| v * v).sum(),
        };
        sq.sqrt()
    }
}

impl FeatureMatrix {
    /// Dense row-major matrix. Values must be finite.
    pub fn dense(kind: FeatureKind, dim: usize, values: Vec<f64>) -> crate::Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(crate::Error::InvalidArgument(format!(
                "{} values do not form rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(crate::Error::InvalidArgument(format!(
                "non-finite feature in row {}",
                pos / dim
            )));
        }
        Ok(Self {
            kind,
            dim,
            rows: values.len() / dim,
            storage: Storage::Dense(values),
        })
    }

    /// Sparse rows given as sorted `(column, value)` lists.
    pub fn sparse(kind: FeatureKind, dim: usize, rows: Vec<Vec<(u32, f64)>>) -> crate::Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (r, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                if j as usize >= dim || !v.is_finite() {
                    return Err(crate::Error::InvalidArgument(format!(
                        "invalid sparse entry ({j}, {v}) in row {r}"
                    )));
                }
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            kind,
            dim,
            rows: rows.len(),
            storage: Storage::Sparse {
                indptr,
                indices,
                values,
            },
        })
    }

    /// One-hot rows over `dim` symbols.
    pub fn one_hot(dim: usize, symbols: &[usize]) -> crate::Result<Self> {
        let rows = symbols.iter().map(|&s| vec![(s as u32, 1.0)]).collect();
        Self::sparse(FeatureKind::OneHot, dim, rows)
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.storage {
            Storage::Dense(v) => Row::Dense(&v[i * self.dim..(i + 1) * self.dim]),
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let (a, b) = (indptr[i], indptr[i + 1]);
                Row::Sparse(&indices[a..b], &values[a..b])
            }
        }
    }
}
