//! Lightweight string-similarity aligners.
//!
//! All ratios are normalized indel similarities, `2 * LCS(a, b) / (|a| + |b|)`
//! over Unicode scalar values. The LCS length is computed with a bit-parallel
//! scan (one machine word per 64 pattern characters).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::Correspondence;
use crate::encoder::{EncodedCorpus, EncodingView};
use crate::par::{map_indexed, Execution};
use crate::text::tokenize;

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("corpora encoded under different views ({source_view} vs {target_view})")]
    ViewMismatch { source_view: EncodingView, target_view: EncodingView },
    #[error("invalid fuzzy config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzyMethod {
    Simple,
    TokenSet,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyConfig {
    pub method: FuzzyMethod,
    pub threshold: f64,
    /// Per-token weights for [`FuzzyMethod::Weighted`]; missing tokens weigh 1.
    #[serde(default)]
    pub weights: Option<HashMap<String, f64>>,
    /// Emit every pair at or above the threshold instead of the best target.
    #[serde(default)]
    pub all_pairs: bool,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        Self { method: FuzzyMethod::Simple, threshold: 0.1, weights: None, all_pairs: false }
    }
}

impl FuzzyConfig {
    pub fn validate(&self) -> Result<(), AlignError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(AlignError::InvalidConfig(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if let Some(w) = &self.weights {
            if let Some((t, v)) = w.iter().find(|(_, v)| !v.is_finite() || **v <= 0.0) {
                return Err(AlignError::InvalidConfig(format!("weight for {t:?} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Longest-common-subsequence length of two character sequences.
pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // pattern = shorter string keeps the bit vector small
    let (pattern, text) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let words = pattern.len().div_ceil(64);

    let mut masks: HashMap<char, Vec<u64>> = HashMap::new();
    for (i, &c) in pattern.iter().enumerate() {
        masks.entry(c).or_insert_with(|| vec![0; words])[i / 64] |= 1u64 << (i % 64);
    }

    let mut s = vec![u64::MAX; words];
    for c in text {
        let Some(m) = masks.get(c) else { continue };
        let mut carry = 0u64;
        for w in 0..words {
            let u = s[w] & m[w];
            let (sum1, c1) = s[w].overflowing_add(u);
            let (sum, c2) = sum1.overflowing_add(carry);
            carry = (c1 || c2) as u64;
            s[w] = sum | (s[w] - u);
        }
    }

    let mut zeros = 0usize;
    for (w, &word) in s.iter().enumerate() {
        let bits = if w + 1 == words && pattern.len() % 64 != 0 { pattern.len() % 64 } else { 64 };
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        zeros += (!word & mask).count_ones() as usize;
    }
    zeros
}

/// Normalized indel similarity, 1.0 for two empty strings.
pub fn fuzzy_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    ratio_chars(&a, &b)
}

fn ratio_chars(a: &[char], b: &[char]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * lcs_len(a, b) as f64 / total as f64
}

struct TokenSplit {
    common: Vec<String>,
    only_a: Vec<String>,
    only_b: Vec<String>,
}

fn sorted_tokens(s: &str) -> Vec<String> {
    let mut t = tokenize(s);
    t.sort();
    t.dedup();
    t
}

fn split_tokens(a: &str, b: &str) -> Option<TokenSplit> {
    let ta = sorted_tokens(a);
    let tb = sorted_tokens(b);
    if ta.is_empty() || tb.is_empty() {
        return None;
    }
    let common: Vec<String> = ta.iter().filter(|t| tb.binary_search(t).is_ok()).cloned().collect();
    let only_a = ta.iter().filter(|t| common.binary_search(t).is_err()).cloned().collect();
    let only_b = tb.iter().filter(|t| common.binary_search(t).is_err()).cloned().collect();
    Some(TokenSplit { common, only_a, only_b })
}

fn join_parts(head: &[String], tail: &[String]) -> Vec<String> {
    head.iter().chain(tail).cloned().collect()
}

fn empty_token_case(a: &str, b: &str) -> Option<f64> {
    match (tokenize(a).is_empty(), tokenize(b).is_empty()) {
        (true, true) => Some(1.0),
        (true, false) | (false, true) => Some(0.0),
        _ => None,
    }
}

/// Token-set similarity: order- and duplicate-insensitive comparison of the
/// shared tokens against each side's full token set.
pub fn token_set_ratio(a: &str, b: &str) -> f64 {
    if let Some(v) = empty_token_case(a, b) {
        return v;
    }
    let split = split_tokens(a, b).expect("both sides have tokens");
    let t0 = split.common.join(" ");
    let t1 = join_parts(&split.common, &split.only_a).join(" ");
    let t2 = join_parts(&split.common, &split.only_b).join(" ");
    let (c0, c1, c2): (Vec<char>, Vec<char>, Vec<char>) =
        (t0.chars().collect(), t1.chars().collect(), t2.chars().collect());
    ratio_chars(&c0, &c1).max(ratio_chars(&c0, &c2)).max(ratio_chars(&c1, &c2))
}

/// Token-set similarity where every character carries the weight of the token
/// it belongs to (separators weigh 1). With all weights equal to 1 this is
/// exactly [`token_set_ratio`].
pub fn weighted_token_set_ratio(a: &str, b: &str, weights: &HashMap<String, f64>) -> f64 {
    if let Some(v) = empty_token_case(a, b) {
        return v;
    }
    let split = split_tokens(a, b).expect("both sides have tokens");
    let t0 = weighted_chars(&split.common, weights);
    let t1 = weighted_chars(&join_parts(&split.common, &split.only_a), weights);
    let t2 = weighted_chars(&join_parts(&split.common, &split.only_b), weights);
    weighted_ratio(&t0, &t1).max(weighted_ratio(&t0, &t2)).max(weighted_ratio(&t1, &t2))
}

fn weighted_chars(tokens: &[String], weights: &HashMap<String, f64>) -> Vec<(char, f64)> {
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push((' ', 1.0));
        }
        let w = weights.get(t).copied().unwrap_or(1.0);
        out.extend(t.chars().map(|c| (c, w)));
    }
    out
}

/// `2 * WLCS / (W(a) + W(b))` where a matched pair contributes the mean of
/// its two weights.
fn weighted_ratio(a: &[(char, f64)], b: &[(char, f64)]) -> f64 {
    let total: f64 = a.iter().chain(b).map(|(_, w)| w).sum();
    if total == 0.0 {
        return 1.0;
    }
    let mut prev = vec![0.0f64; b.len() + 1];
    let mut cur = vec![0.0f64; b.len() + 1];
    for &(ca, wa) in a {
        for (j, &(cb, wb)) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + (wa + wb) / 2.0 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (2.0 * prev[b.len()] / total).min(1.0)
}

/// Similarity of two texts under `cfg.method`.
pub fn similarity(a: &str, b: &str, cfg: &FuzzyConfig) -> f64 {
    match cfg.method {
        FuzzyMethod::Simple => fuzzy_ratio(a, b),
        FuzzyMethod::TokenSet => token_set_ratio(a, b),
        FuzzyMethod::Weighted => match &cfg.weights {
            Some(w) => weighted_token_set_ratio(a, b, w),
            None => token_set_ratio(a, b),
        },
    }
}

pub fn align_fuzzy(
    src: &EncodedCorpus,
    tgt: &EncodedCorpus,
    cfg: &FuzzyConfig,
) -> Result<Vec<Correspondence>, AlignError> {
    align_fuzzy_with(src, tgt, cfg, Execution::default())
}

/// Scores every source text against every target text.
///
/// Best-match mode keeps one target per source (ties go to the smaller target
/// IRI); all-pairs mode keeps every pair at or above the threshold, in target
/// order. Output follows source order.
pub fn align_fuzzy_with(
    src: &EncodedCorpus,
    tgt: &EncodedCorpus,
    cfg: &FuzzyConfig,
    exec: Execution,
) -> Result<Vec<Correspondence>, AlignError> {
    if src.view != tgt.view {
        return Err(AlignError::ViewMismatch { source_view: src.view, target_view: tgt.view });
    }
    cfg.validate()?;
    let provenance = format!("fuzzy:{}", method_name(cfg.method));

    let rows = map_indexed(exec, src.len(), |i| {
        let scores = tgt.texts.iter().map(|t| similarity(&src.texts[i], t, cfg));
        if cfg.all_pairs {
            scores
                .enumerate()
                .filter(|(_, s)| *s >= cfg.threshold)
                .map(|(j, s)| Correspondence::new(&src.iris[i], &tgt.iris[j], s, &provenance))
                .collect::<Vec<_>>()
        } else {
            let mut best: Option<(usize, f64)> = None;
            for (j, s) in scores.enumerate() {
                best = match best {
                    None => Some((j, s)),
                    Some((bj, bs)) if s > bs || (s == bs && tgt.iris[j] < tgt.iris[bj]) => Some((j, s)),
                    keep => keep,
                };
            }
            best.filter(|(_, s)| *s >= cfg.threshold)
                .map(|(j, s)| Correspondence::new(&src.iris[i], &tgt.iris[j], s, &provenance))
                .into_iter()
                .collect()
        }
    });
    Ok(rows.into_iter().flatten().collect())
}

fn method_name(m: FuzzyMethod) -> &'static str {
    match m {
        FuzzyMethod::Simple => "simple",
        FuzzyMethod::TokenSet => "token_set",
        FuzzyMethod::Weighted => "weighted",
    }
}
