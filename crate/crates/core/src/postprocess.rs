//! Post-processing of matcher output.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::alignment::Correspondence;
use crate::retrieval::TfidfModel;
use crate::text::tokenize;

/// Keeps correspondences with `score >= threshold`, in order.
pub fn threshold_filter(corrs: &[Correspondence], threshold: f64) -> Vec<Correspondence> {
    corrs.iter().filter(|c| c.score >= threshold).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CardinalityPolicy {
    #[default]
    ManyToMany,
    OneToOneGreedy,
}

/// Applies `policy`. Greedy one-to-one visits pairs by descending score
/// (ties: source IRI, then target IRI) and accepts a pair when neither end is
/// taken yet; accepted pairs keep their input order.
pub fn cardinality_filter(corrs: &[Correspondence], policy: CardinalityPolicy) -> Vec<Correspondence> {
    match policy {
        CardinalityPolicy::ManyToMany => corrs.to_vec(),
        CardinalityPolicy::OneToOneGreedy => {
            let mut order: Vec<usize> = (0..corrs.len()).collect();
            order.sort_by(|&a, &b| {
                let (x, y) = (&corrs[a], &corrs[b]);
                y.score.total_cmp(&x.score).then_with(|| x.source.cmp(&y.source)).then_with(|| x.target.cmp(&y.target))
            });
            let mut used_src: HashSet<&str> = HashSet::new();
            let mut used_tgt: HashSet<&str> = HashSet::new();
            let mut keep = vec![false; corrs.len()];
            for i in order {
                let c = &corrs[i];
                if !used_src.contains(c.source.as_str()) && !used_tgt.contains(c.target.as_str()) {
                    used_src.insert(&c.source);
                    used_tgt.insert(&c.target);
                    keep[i] = true;
                }
            }
            corrs.iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c.clone()).collect()
        }
    }
}

/// Label set and surface forms for projecting generated text onto labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMapperConfig {
    pub labels: Vec<String>,
    /// Extra surface forms per label; the label itself is always one.
    #[serde(default)]
    pub synonyms: BTreeMap<String, Vec<String>>,
}

impl Default for LabelMapperConfig {
    fn default() -> Self {
        let synonyms = [("yes", vec!["yes", "true", "correct"]), ("no", vec!["no", "false", "incorrect"])]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
            .collect();
        Self { labels: vec!["yes".into(), "no".into()], synonyms }
    }
}

impl LabelMapperConfig {
    /// Two-label mapper; yes/no options get the default synonyms.
    pub fn for_options(positive: &str, negative: &str) -> Self {
        let defaults = Self::default();
        let synonyms = [positive, negative]
            .iter()
            .filter_map(|l| defaults.synonyms.get(&l.to_lowercase()).map(|s| (l.to_string(), s.clone())))
            .collect();
        Self { labels: vec![positive.to_string(), negative.to_string()], synonyms }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.labels.is_empty() {
            return Err("label mapper needs at least one label".into());
        }
        let distinct: HashSet<&String> = self.labels.iter().collect();
        if distinct.len() != self.labels.len() {
            return Err("label mapper labels must be distinct".into());
        }
        Ok(())
    }

    fn surface_forms(&self, label: &str) -> Vec<String> {
        let mut forms = vec![label.to_string()];
        for s in self.synonyms.get(label).into_iter().flatten() {
            if !forms.contains(s) {
                forms.push(s.clone());
            }
        }
        forms
    }
}

/// Maps generated text to one of `cfg.labels`.
///
/// A surface form whose tokens open the generated text wins outright with
/// confidence 1.0 (labels checked in order). Otherwise every surface form is
/// a TF-IDF document and the label with the most similar form wins, with the
/// cosine as confidence; out-of-vocabulary words of the generated text count
/// toward its norm. Ties go to the earlier label.
pub fn map_label(generated: &str, cfg: &LabelMapperConfig) -> (String, f64) {
    let Some(first) = cfg.labels.first() else {
        return (String::new(), 0.0);
    };
    let tokens = tokenize(generated);

    for label in &cfg.labels {
        for form in cfg.surface_forms(label) {
            let ft = tokenize(&form);
            if !ft.is_empty() && tokens.starts_with(&ft) {
                return (label.clone(), 1.0);
            }
        }
    }

    let forms: Vec<(usize, String)> = cfg
        .labels
        .iter()
        .enumerate()
        .flat_map(|(i, l)| cfg.surface_forms(l).into_iter().map(move |f| (i, f)))
        .collect();
    let docs: Vec<&str> = forms.iter().map(|(_, f)| f.as_str()).collect();
    let Ok(model) = TfidfModel::fit(&docs) else {
        return (first.clone(), 0.0);
    };

    let (query, oov_sq) = model.weights(generated);
    let q_norm = (query.iter().map(|(_, w)| w * w).sum::<f64>() + oov_sq).sqrt();
    let mut best = vec![0.0f64; cfg.labels.len()];
    if q_norm > 0.0 {
        for ((label_idx, _), doc) in forms.iter().zip(&docs) {
            let (d, _) = model.weights(doc);
            let d_norm = d.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if d_norm == 0.0 {
                continue;
            }
            let dot: f64 =
                query.iter().filter_map(|(c, w)| d.iter().find(|(dc, _)| dc == c).map(|(_, dw)| w * dw)).sum();
            best[*label_idx] = best[*label_idx].max(dot / (q_norm * d_norm));
        }
    }
    let mut winner = 0;
    for (i, &s) in best.iter().enumerate() {
        if s > best[winner] {
            winner = i;
        }
    }
    (cfg.labels[winner].clone(), best[winner])
}
