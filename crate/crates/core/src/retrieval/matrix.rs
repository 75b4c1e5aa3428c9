use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::RetrievalError;
use crate::par::{map_indexed, Execution};

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major, `rows * dim` values.
    Dense(Vec<f64>),
    /// Per row, (column, value) pairs sorted by column.
    Sparse(Vec<Vec<(u32, f64)>>),
}

/// One vector per concept. Non-zero rows are L2-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorMatrix {
    rows: usize,
    dim: usize,
    storage: Storage,
    /// Term to column map, present for TF-IDF matrices.
    pub vocabulary: Option<BTreeMap<String, usize>>,
}

impl VectorMatrix {
    /// Dense matrix from raw rows; every row is L2-normalized (zero rows are
    /// left as is).
    pub fn from_dense_rows(rows: Vec<Vec<f64>>) -> Result<Self, RetrievalError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, mut row) in rows.iter().cloned().enumerate() {
            if row.len() != dim {
                return Err(RetrievalError::DimensionMismatch { expected: dim, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(RetrievalError::ProviderError(format!("row {i} has non-finite entries")));
            }
            normalize(&mut row);
            values.extend(row);
        }
        Ok(Self { rows: rows.len(), dim, storage: Storage::Dense(values), vocabulary: None })
    }

    /// Sparse matrix; rows are sorted by column and L2-normalized.
    pub fn from_sparse_rows(dim: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let rows: Vec<Vec<(u32, f64)>> = rows
            .into_iter()
            .map(|mut r| {
                r.sort_by_key(|(c, _)| *c);
                let norm = r.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    r.iter_mut().for_each(|(_, v)| *v /= norm);
                }
                r
            })
            .collect();
        Self { rows: rows.len(), dim, storage: Storage::Sparse(rows), vocabulary: None }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(v) => v[i * self.dim..(i + 1) * self.dim].to_vec(),
            Storage::Sparse(rows) => {
                let mut out = vec![0.0; self.dim];
                for &(c, v) in &rows[i] {
                    out[c as usize] = v;
                }
                out
            }
        }
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v[i * self.dim..(i + 1) * self.dim].iter().map(|x| x * x).sum::<f64>().sqrt(),
            Storage::Sparse(rows) => rows[i].iter().map(|(_, x)| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Selects rows `start..end` into a new matrix sharing the vocabulary.
    pub(crate) fn slice_rows(&self, start: usize, end: usize) -> Self {
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v[start * self.dim..end * self.dim].to_vec()),
            Storage::Sparse(rows) => Storage::Sparse(rows[start..end].to_vec()),
        };
        Self { rows: end - start, dim: self.dim, storage, vocabulary: self.vocabulary.clone() }
    }

    fn sparse(&self) -> Option<&[Vec<(u32, f64)>]> {
        match &self.storage {
            Storage::Sparse(rows) => Some(rows),
            Storage::Dense(_) => None,
        }
    }

    fn dense_values(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(v) => Some(v),
            Storage::Sparse(_) => None,
        }
    }
}

fn normalize(row: &mut [f64]) {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Ranked (target index, similarity) lists, one per source row.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub lists: Vec<Vec<(usize, f64)>>,
}

pub fn cosine_topk(src: &VectorMatrix, tgt: &VectorMatrix, k: usize) -> Result<CandidateList, RetrievalError> {
    cosine_topk_with(src, tgt, k, Execution::default())
}

/// Exact top-k by cosine similarity; ties go to the smaller target index.
pub fn cosine_topk_with(
    src: &VectorMatrix,
    tgt: &VectorMatrix,
    k: usize,
    exec: Execution,
) -> Result<CandidateList, RetrievalError> {
    if src.dim != tgt.dim {
        return Err(RetrievalError::DimensionMismatch { expected: src.dim, got: tgt.dim });
    }
    if k == 0 {
        return Err(RetrievalError::InvalidConfig("top_k must be at least 1".into()));
    }

    let lists = match (src.sparse(), tgt.sparse()) {
        (Some(s), Some(t)) => {
            let mut postings: Vec<Vec<(u32, f64)>> = vec![Vec::new(); tgt.dim];
            for (j, row) in t.iter().enumerate() {
                for &(c, v) in row {
                    postings[c as usize].push((j as u32, v));
                }
            }
            map_indexed(exec, src.rows, |i| {
                let mut scores = vec![0.0f64; tgt.rows];
                for &(c, v) in &s[i] {
                    for &(j, w) in &postings[c as usize] {
                        scores[j as usize] += v * w;
                    }
                }
                top_k(scores, k)
            })
        }
        _ => {
            let dense_tgt: Vec<f64> = match tgt.dense_values() {
                Some(v) => v.to_vec(),
                None => (0..tgt.rows).flat_map(|j| tgt.dense_row(j)).collect(),
            };
            let dim = tgt.dim;
            map_indexed(exec, src.rows, |i| {
                let q = src.dense_row(i);
                let scores: Vec<f64> = (0..tgt.rows).map(|j| dot(&q, &dense_tgt[j * dim..(j + 1) * dim])).collect();
                top_k(scores, k)
            })
        }
    };
    Ok(CandidateList { lists })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rank_cmp(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

fn top_k(scores: Vec<f64>, k: usize) -> Vec<(usize, f64)> {
    // + 0.0 folds -0.0 so total_cmp orders it with +0.0
    let mut ranked: Vec<(usize, f64)> = scores.into_iter().map(|s| s + 0.0).enumerate().collect();
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, rank_cmp);
        ranked.truncate(k);
    }
    ranked.sort_by(rank_cmp);
    ranked
}
