//! `EMB1` embedding interchange files.
//!
//! Layout, all integers little-endian:
//! `b"EMB1"`, `u32` count, `u32` dim, then per record a `u16` id length,
//! the UTF-8 id bytes and `dim` `f32` values.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{FeatureKind, FeatureMatrix};
use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f32>,
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::EmbeddingFormat(format!(
                "truncated file while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
}

pub fn parse_emb1(bytes: &[u8]) -> Result<(usize, Vec<EmbeddingRecord>)> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::EmbeddingFormat("bad magic, expected EMB1".into()));
    }
    let count = cur.u32("count")? as usize;
    let dim = cur.u32("dim")? as usize;
    if dim == 0 {
        return Err(Error::EmbeddingFormat("dimension is zero".into()));
    }
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for row in 0..count {
        let len = cur.u16("id length")? as usize;
        let id = std::str::from_utf8(cur.take(len, "id")?)
            .map_err(|_| Error::EmbeddingFormat(format!("row {row}: id is not UTF-8")))?
            .to_string();
        let raw = cur.take(4 * dim, "vector")?;
        let vector: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::EmbeddingFormat(format!("row {row}: non-finite value")));
        }
        records.push(EmbeddingRecord { id, vector });
    }
    if cur.pos != bytes.len() {
        return Err(Error::EmbeddingFormat(format!(
            "{} trailing bytes after {count} records of dim {dim}",
            bytes.len() - cur.pos
        )));
    }
    Ok((dim, records))
}

pub fn write_emb1(path: impl AsRef<Path>, dim: usize, records: &[EmbeddingRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(12 + records.len() * (2 + 16 + 4 * dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for r in records {
        if r.vector.len() != dim {
            return Err(Error::EmbeddingFormat(format!(
                "record `{}` has {} values, expected {dim}",
                r.id,
                r.vector.len()
            )));
        }
        let id = r.id.as_bytes();
        let len = u16::try_from(id.len())
            .map_err(|_| Error::EmbeddingFormat(format!("id `{}` too long", r.id)))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id);
        for v in &r.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads an `EMB1` file and aligns its rows to the corpus document order.
pub fn load_embeddings(path: impl AsRef<Path>, corpus: &CorpusIndex) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (dim, records) = parse_emb1(&bytes)?;
    let mut by_id: HashMap<&str, &[f32]> = HashMap::with_capacity(records.len());
    for r in &records {
        if by_id.insert(r.id.as_str(), &r.vector).is_some() {
            return Err(Error::EmbeddingFormat(format!("duplicate id `{}`", r.id)));
        }
    }
    let mut values = Vec::with_capacity(corpus.len() * dim);
    for doc in corpus.documents() {
        let v = by_id
            .get(doc.id.as_str())
            .ok_or_else(|| Error::MissingEmbedding(doc.id.clone()))?;
        values.extend(v.iter().map(|&x| x as f64));
    }
    FeatureMatrix::dense(FeatureKind::Embedding, dim, values)
}
