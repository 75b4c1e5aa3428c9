use std::collections::BTreeMap;

use super::{RetrievalError, VectorMatrix};
use crate::text::tokenize;

/// Smoothed TF-IDF: `w(t, d) = tf(t, d) * (ln((1 + N) / (1 + df(t))) + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub n_docs: usize,
}

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Result<Self, RetrievalError> {
        if corpus.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let mut terms = tokenize(doc.as_ref());
            terms.sort();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let n = corpus.len();
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (col, (term, count)) in df.into_iter().enumerate() {
            idf.push(smoothed_idf(n, count));
            vocabulary.insert(term, col);
        }
        Ok(Self { vocabulary, idf, n_docs: n })
    }

    /// Unnormalized weights of the in-vocabulary terms of `text`, plus the
    /// squared weight mass of out-of-vocabulary terms (each scored as
    /// `df = 0`).
    pub fn weights(&self, text: &str) -> (Vec<(u32, f64)>, f64) {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        let mut oov: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokenize(text) {
            match self.vocabulary.get(&t) {
                Some(&c) => *tf.entry(c).or_insert(0.0) += 1.0,
                None => *oov.entry(t).or_insert(0.0) += 1.0,
            }
        }
        let unseen_idf = smoothed_idf(self.n_docs, 0);
        let oov_sq = oov.values().map(|f| (f * unseen_idf).powi(2)).sum();
        let row = tf.into_iter().map(|(c, f)| (c as u32, f * self.idf[c])).collect();
        (row, oov_sq)
    }

    /// L2-normalized rows over the fitted vocabulary; unknown terms are
    /// dropped.
    pub fn transform<S: AsRef<str>>(&self, texts: &[S]) -> VectorMatrix {
        let rows = texts.iter().map(|t| self.weights(t.as_ref()).0).collect();
        let mut m = VectorMatrix::from_sparse_rows(self.vocabulary.len(), rows);
        m.vocabulary = Some(self.vocabulary.clone());
        m
    }
}

fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Fits TF-IDF on `corpus` and returns its own rows.
pub fn tfidf_fit<S: AsRef<str>>(corpus: &[S]) -> Result<VectorMatrix, RetrievalError> {
    Ok(TfidfModel::fit(corpus)?.transform(corpus))
}
