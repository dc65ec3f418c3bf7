//! Dense feature matrices: bag-of-words / TF-IDF and precomputed embeddings.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::Dataset;
use crate::{Error, Result};

/// Row-major `rows x dims` matrix with 32-bit storage.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dims: usize,
    values: Vec<f32>,
    /// Index of the dataset example each row belongs to.
    pub row_ids: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dims: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != rows * dims {
            return Err(Error::DimensionMismatch {
                expected: rows * dims,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dims.max(1),
                col: pos % dims.max(1),
            });
        }
        Ok(FeatureMatrix {
            rows,
            dims,
            values,
            row_ids: (0..rows).collect(),
        })
    }

    pub fn zeros(rows: usize, dims: usize) -> Self {
        FeatureMatrix {
            rows,
            dims,
            values: vec![0.0; rows * dims],
            row_ids: (0..rows).collect(),
        }
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dims = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: bad.len(),
            });
        }
        Self::new(rows.len(), dims, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dims.max(1)).take(self.rows)
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.dims);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: indices.len(),
            dims: self.dims,
            values,
            row_ids: indices.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Writes the `GFEM` binary layout.
    pub fn write_embeddings(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_embedding_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn to_embedding_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(20 + self.values.len() * 4);
        buf.extend_from_slice(EMBEDDING_MAGIC);
        buf.extend_from_slice(&(self.rows as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dims as u64).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf
    }

    pub fn from_embedding_bytes(bytes: &[u8]) -> Result<Self> {
        let (rows, dims, payload) = read_header(bytes, EMBEDDING_MAGIC, 2)
            .map(|(h, p)| (h[0], h[1], p))?;
        let expected = rows
            .checked_mul(dims)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::invalid("embedding header overflows"))?;
        if payload.len() != expected {
            return Err(Error::invalid(format!(
                "embedding header declares {rows}x{dims} ({expected} payload bytes) but file carries {}",
                payload.len()
            )));
        }
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(rows, dims, values)
    }
}

pub(crate) const EMBEDDING_MAGIC: &[u8; 4] = b"GFEM";

/// Parses a 4-byte magic followed by `count` little-endian u64 header words.
pub(crate) fn read_header<'a>(
    bytes: &'a [u8],
    magic: &[u8; 4],
    count: usize,
) -> Result<(Vec<usize>, &'a [u8])> {
    let header_len = 4 + 8 * count;
    if bytes.len() < header_len {
        return Err(Error::invalid("file shorter than its header"));
    }
    if &bytes[..4] != magic {
        return Err(Error::invalid(format!(
            "bad magic: expected {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let words = (0..count)
        .map(|k| {
            let start = 4 + 8 * k;
            let mut w = [0u8; 8];
            w.copy_from_slice(&bytes[start..start + 8]);
            usize::try_from(u64::from_le_bytes(w))
                .map_err(|_| Error::invalid("header value does not fit in memory"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((words, &bytes[header_len..]))
}

pub fn load_embeddings(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureMatrix::from_embedding_bytes(&bytes)
}

/// Loads embeddings that must align one-to-one with `dataset`.
pub fn load_embeddings_for(path: &Path, dataset: &Dataset) -> Result<FeatureMatrix> {
    let m = load_embeddings(path)?;
    if m.rows() != dataset.len() {
        return Err(Error::invalid(format!(
            "{}: {} embedding rows for {} examples",
            path.display(),
            m.rows(),
            dataset.len()
        )));
    }
    Ok(m)
}

/// Frozen term index.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    pub min_df: usize,
    pub max_features: usize,
    pub tfidf: bool,
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

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.get(term).map(|i| self.doc_freq[i])
    }

    /// Smoothed inverse document frequency `ln((1+n)/(1+df)) + 1`.
    pub fn idf(&self, column: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[column] as f64)).ln() + 1.0
    }
}

/// Keeps the `max_features` most frequent terms by document frequency among
/// those with `df >= min_df`; ties go to the alphabetically smaller term.
/// Columns are assigned in that ranked order.
pub fn fit_bow(train: &Dataset, min_df: usize, max_features: usize, tfidf: bool) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::invalid("cannot fit a vocabulary on an empty dataset"));
    }
    if min_df > train.len() {
        return Err(Error::invalid(format!(
            "min_df = {min_df} exceeds the corpus size {}",
            train.len()
        )));
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for ex in &train.examples {
        let mut seen: Vec<&str> = ex.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().filter(|&(_, d)| d >= min_df).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_features);
    if ranked.is_empty() {
        return Err(Error::invalid("vocabulary is empty after min_df / max_features filtering"));
    }
    let terms: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();
    let mut vocab = Vocabulary {
        index: HashMap::new(),
        doc_freq: ranked.iter().map(|&(_, d)| d).collect(),
        terms,
        n_docs: train.len(),
        min_df,
        max_features,
        tfidf,
    };
    vocab.rebuild_index();
    Ok(vocab)
}

impl Vocabulary {
    fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

/// Raw counts, or L2-normalised TF-IDF when the vocabulary was fitted with
/// `tfidf = true`. Unknown terms are dropped.
pub fn transform(vocab: &Vocabulary, data: &Dataset) -> FeatureMatrix {
    let dims = vocab.len();
    let mut out = FeatureMatrix::zeros(data.len(), dims);
    let mut acc = vec![0.0f64; dims];
    for (i, ex) in data.examples.iter().enumerate() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for t in &ex.tokens {
            if let Some(j) = vocab.get(t) {
                acc[j] += 1.0;
            }
        }
        if vocab.tfidf {
            for (j, a) in acc.iter_mut().enumerate() {
                if *a != 0.0 {
                    *a *= vocab.idf(j);
                }
            }
            let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                acc.iter_mut().for_each(|a| *a /= norm);
            }
        }
        for (dst, a) in out.row_mut(i).iter_mut().zip(&acc) {
            *dst = *a as f32;
        }
    }
    out
}

fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Fixed-width dense vectors from token hashing: each token contributes a
/// pseudo-random sign pattern, rows are averaged and L2-normalized.
/// Deterministic across platforms; useful where precomputed sentence
/// embeddings are not available.
pub fn hashed_embeddings(data: &Dataset, dims: usize, seed: u64) -> Result<FeatureMatrix> {
    if dims == 0 {
        return Err(Error::invalid("embedding width must be positive"));
    }
    let mut values = Vec::with_capacity(data.len() * dims);
    let mut acc = vec![0.0f64; dims];
    for ex in &data.examples {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for tok in &ex.tokens {
            let mut h = fnv1a(tok.as_bytes(), seed);
            for (k, a) in acc.iter_mut().enumerate() {
                if k % 64 == 0 && k > 0 {
                    h = fnv1a(&h.to_le_bytes(), seed);
                }
                *a += if (h >> (k % 64)) & 1 == 1 { 1.0 } else { -1.0 };
            }
        }
        let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        values.extend(acc.iter().map(|a| (a * scale) as f32));
    }
    FeatureMatrix::new(data.len(), dims, values)
}
