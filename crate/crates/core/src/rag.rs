//! LLM pairwise, RAG and few-shot RAG matchers.
//!
//! RAG retrieves candidate targets per source from the label (`C`) view, then
//! asks the generator a yes/no question per candidate pair rendered under the
//! configured view. Pairs whose yes-confidence reaches `llm_threshold` are
//! kept.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::Correspondence;
use crate::encoder::{encode, render, EncodeError, EncodeTarget, EncodedCorpus, EncodingView, StructuredConcept};
use crate::llm::{Decision, DecisionLabel, LlmClient, LlmConfig, LlmError, PairMeta};
use crate::par::Execution;
use crate::parser::Ontology;
use crate::postprocess::{map_label, LabelMapperConfig};
use crate::retrieval::{candidates, EmbeddingProvider, RetrievalConfig, RetrievalError};

/// Default limit on `|src| * |tgt|` for the pairwise matcher.
pub const DEFAULT_PAIR_CAP: usize = 200 * 200;

#[derive(Debug, Error)]
pub enum RagError {
    #[error("invalid RAG config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{pairs} candidate pairs exceed the pairwise cap of {cap}")]
    PairCapExceeded { pairs: usize, cap: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("{source} ({completed} pairs decided before the failure)")]
    Llm { source: LlmError, completed: usize },
    #[error("exemplar file {path}: {message}")]
    Exemplars { path: PathBuf, message: String },
    #[error("run journal {path}: {source}")]
    Journal { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("{block} must contain {placeholder} exactly once")]
    Placeholder { block: &'static str, placeholder: &'static str },
}

/// One answered example pair for few-shot prompting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    #[serde(alias = "source_text")]
    pub source: String,
    #[serde(alias = "target_text")]
    pub target: String,
    pub answer: DecisionLabel,
}

impl Exemplar {
    pub fn new(source: &str, target: &str, answer: DecisionLabel) -> Self {
        Self { source: source.into(), target: target.into(), answer }
    }
}

/// Built-in exemplars used when none are configured.
pub fn default_exemplars() -> Vec<Exemplar> {
    vec![Exemplar::new("car", "automobile", DecisionLabel::Yes), Exemplar::new("car", "banana", DecisionLabel::No)]
}

/// Reads a JSON array of `{"source", "target", "answer"}` objects.
pub fn load_exemplars(path: &Path) -> Result<Vec<Exemplar>, RagError> {
    let err = |message: String| RagError::Exemplars { path: path.to_path_buf(), message };
    let bytes = std::fs::read(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_slice(&bytes).map_err(|e| err(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagConfig {
    /// Candidate generation; `threshold` is T_r. Unused by the pairwise
    /// matcher.
    #[serde(default)]
    pub retrieval: RetrievalConfig,
    pub llm: LlmConfig,
    /// T_l: minimum yes-confidence of a kept pair.
    #[serde(default = "default_llm_threshold")]
    pub llm_threshold: f64,
    /// n_s: answered examples per prompt (0 for plain RAG).
    #[serde(default)]
    pub shots: usize,
    /// View of the generator prompt. Retrieval always uses `C`.
    #[serde(default = "default_view")]
    pub view: EncodingView,
    #[serde(default)]
    pub exemplars: Option<Vec<Exemplar>>,
    /// Loaded by the pipeline when `exemplars` is absent.
    #[serde(default)]
    pub exemplars_path: Option<PathBuf>,
    /// JSON-lines file of decided pairs; reused on the next run.
    #[serde(default)]
    pub journal: Option<PathBuf>,
    #[serde(default = "default_pair_cap")]
    pub pair_cap: usize,
    #[serde(default)]
    pub template: PromptTemplate,
}

fn default_view() -> EncodingView {
    EncodingView::C
}

fn default_llm_threshold() -> f64 {
    0.5
}

fn default_pair_cap() -> usize {
    DEFAULT_PAIR_CAP
}

impl Default for RagConfig {
    fn default() -> Self {
        Self {
            retrieval: RetrievalConfig::default(),
            llm: LlmConfig::default(),
            llm_threshold: default_llm_threshold(),
            shots: 0,
            view: EncodingView::C,
            exemplars: None,
            exemplars_path: None,
            journal: None,
            pair_cap: DEFAULT_PAIR_CAP,
            template: PromptTemplate::default(),
        }
    }
}

impl RagConfig {
    pub fn validate(&self) -> Result<(), RagError> {
        self.validate_params(true)
    }

    /// Like [`validate`](Self::validate); the shot count is only checked
    /// against the exemplars when `check_shots` is set.
    pub fn validate_params(&self, check_shots: bool) -> Result<(), RagError> {
        self.retrieval.validate()?;
        self.llm.validate().map_err(RagError::InvalidConfig)?;
        // thresholds above 1 are accepted and simply keep nothing
        if self.llm_threshold.is_nan() || self.llm_threshold < 0.0 {
            return Err(RagError::InvalidConfig(format!("llm_threshold {} below 0", self.llm_threshold)));
        }
        self.template.validate(self.shots > 0)?;
        let available = self.resolved_exemplars().len();
        if check_shots && self.shots > available {
            return Err(RagError::InvalidConfig(format!(
                "{} shots requested but only {available} exemplars",
                self.shots
            )));
        }
        Ok(())
    }

    /// Configured exemplars, or the built-in pair.
    pub fn resolved_exemplars(&self) -> Vec<Exemplar> {
        self.exemplars.clone().unwrap_or_else(default_exemplars)
    }

    fn shot_list(&self) -> Vec<Exemplar> {
        self.resolved_exemplars().into_iter().take(self.shots).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub preamble: String,
    /// Uses `{src}`, `{tgt}` and `{answer}`.
    pub shot_block: String,
    /// Uses `{src}` and `{tgt}`, and ends in the answer cue.
    pub query_block: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            preamble: "Classify if the two concepts refer to the same real-world entity. Answer with yes or no.\n\n"
                .into(),
            shot_block: "### First concept: {src}\n### Second concept: {tgt}\n### Answer: {answer}\n\n".into(),
            query_block: "### First concept: {src}\n### Second concept: {tgt}\n### Answer: ".into(),
        }
    }
}

impl PromptTemplate {
    pub fn validate(&self, with_shots: bool) -> Result<(), TemplateError> {
        let once = |block: &'static str, text: &str, placeholder: &'static str| {
            if text.matches(placeholder).count() == 1 {
                Ok(())
            } else {
                Err(TemplateError::Placeholder { block, placeholder })
            }
        };
        once("query_block", &self.query_block, "{src}")?;
        once("query_block", &self.query_block, "{tgt}")?;
        if with_shots {
            for p in ["{src}", "{tgt}", "{answer}"] {
                if !self.shot_block.contains(p) {
                    return Err(TemplateError::Placeholder { block: "shot_block", placeholder: p });
                }
            }
        }
        Ok(())
    }
}

fn fill(block: &str, src: &str, tgt: &str, answer: Option<&str>) -> String {
    // one pass, so placeholder-like text inside labels is left alone
    let mut out = String::with_capacity(block.len() + src.len() + tgt.len());
    let mut rest = block;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        let (value, skip) = if tail.starts_with("{src}") {
            (Some(src), 5)
        } else if tail.starts_with("{tgt}") {
            (Some(tgt), 5)
        } else if tail.starts_with("{answer}") && answer.is_some() {
            (answer, 8)
        } else {
            (None, 1)
        };
        match value {
            Some(v) => out.push_str(v),
            None => out.push('{'),
        }
        rest = &tail[skip..];
    }
    out.push_str(rest);
    out
}

fn answer_word(a: DecisionLabel) -> &'static str {
    match a {
        DecisionLabel::Yes => "yes",
        DecisionLabel::No => "no",
    }
}

/// Renders the preamble, each shot with its answer, then the query pair
/// under `view`.
pub fn build_prompt(
    pair: (&StructuredConcept, &StructuredConcept),
    view: EncodingView,
    shots: &[Exemplar],
    template: &PromptTemplate,
) -> Result<String, TemplateError> {
    template.validate(!shots.is_empty())?;
    let side = |c: &StructuredConcept| render(&c.concept_label, view, &c.related_labels);
    let mut out = template.preamble.clone();
    for shot in shots {
        out.push_str(&fill(&template.shot_block, &shot.source, &shot.target, Some(answer_word(shot.answer))));
    }
    out.push_str(&fill(&template.query_block, &side(pair.0), &side(pair.1), None));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JournalEntry {
    source: String,
    target: String,
    prompt_hash: String,
    label: DecisionLabel,
    confidence: f64,
    #[serde(default)]
    fallback: bool,
}

fn prompt_hash(prompt: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in prompt.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Append-only record of decided pairs, keyed by IRIs and prompt hash.
struct Journal {
    path: Option<PathBuf>,
    done: HashMap<(String, String, String), Decision>,
}

impl Journal {
    fn open(path: Option<&Path>) -> Result<Self, RagError> {
        let mut done = HashMap::new();
        if let Some(p) = path {
            let err = |source| RagError::Journal { path: p.to_path_buf(), source };
            match File::open(p) {
                Ok(f) => {
                    for line in BufReader::new(f).lines() {
                        let line = line.map_err(err)?;
                        // a torn last line from an interrupted run is skipped
                        if let Ok(e) = serde_json::from_str::<JournalEntry>(&line) {
                            let d = Decision { label: e.label, confidence: e.confidence, fallback: e.fallback };
                            done.insert((e.source, e.target, e.prompt_hash), d);
                        }
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(err(e)),
            }
        }
        Ok(Self { path: path.map(Path::to_path_buf), done })
    }

    fn get(&self, src: &str, tgt: &str, hash: &str) -> Option<Decision> {
        self.done.get(&(src.to_string(), tgt.to_string(), hash.to_string())).copied()
    }

    fn append(&mut self, entries: &[JournalEntry]) -> Result<(), RagError> {
        for e in entries {
            let d = Decision { label: e.label, confidence: e.confidence, fallback: e.fallback };
            self.done.insert((e.source.clone(), e.target.clone(), e.prompt_hash.clone()), d);
        }
        let Some(path) = &self.path else {
            return Ok(());
        };
        if entries.is_empty() {
            return Ok(());
        }
        let err = |source| RagError::Journal { path: path.clone(), source };
        let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
        let mut buf = String::new();
        for e in entries {
            buf.push_str(&serde_json::to_string(e).expect("journal entries serialize"));
            buf.push('\n');
        }
        f.write_all(buf.as_bytes()).map_err(err)?;
        f.flush().map_err(err)
    }
}

struct Query {
    src: usize,
    tgt: usize,
    prompt: String,
    meta: PairMeta,
}

fn queries(
    src: &EncodedCorpus,
    tgt: &EncodedCorpus,
    pairs: &[(usize, usize)],
    cfg: &RagConfig,
) -> Result<Vec<Query>, RagError> {
    let shots = cfg.shot_list();
    pairs
        .iter()
        .map(|&(i, j)| {
            let (s, t) = (&src.structured[i], &tgt.structured[j]);
            Ok(Query {
                src: i,
                tgt: j,
                prompt: build_prompt((s, t), cfg.view, &shots, &cfg.template)?,
                meta: PairMeta::new(&s.concept_label, &t.concept_label),
            })
        })
        .collect()
}

/// Decides every query, `batch_size` at a time, reusing journaled decisions
/// and journaling each completed batch.
fn run_decisions<F>(
    src: &EncodedCorpus,
    tgt: &EncodedCorpus,
    qs: &[Query],
    journal_path: Option<&Path>,
    batch_size: usize,
    decide: F,
) -> Result<Vec<Decision>, RagError>
where
    F: Fn(&[(String, Option<PairMeta>)]) -> Vec<Result<Decision, LlmError>>,
{
    let mut journal = Journal::open(journal_path)?;
    let hashes: Vec<String> = qs.iter().map(|q| prompt_hash(&q.prompt)).collect();
    let mut out: Vec<Option<Decision>> =
        qs.iter().zip(&hashes).map(|(q, h)| journal.get(&src.iris[q.src], &tgt.iris[q.tgt], h)).collect();
    let pending: Vec<usize> = (0..qs.len()).filter(|&i| out[i].is_none()).collect();
    let mut completed = qs.len() - pending.len();

    for chunk in pending.chunks(batch_size.max(1)) {
        let items: Vec<(String, Option<PairMeta>)> =
            chunk.iter().map(|&i| (qs[i].prompt.clone(), Some(qs[i].meta.clone()))).collect();
        let results = decide(&items);
        let mut entries = Vec::with_capacity(chunk.len());
        let mut failure = None;
        for (&i, r) in chunk.iter().zip(results) {
            match r {
                Ok(d) => {
                    out[i] = Some(d);
                    entries.push(JournalEntry {
                        source: src.iris[qs[i].src].clone(),
                        target: tgt.iris[qs[i].tgt].clone(),
                        prompt_hash: hashes[i].clone(),
                        label: d.label,
                        confidence: d.confidence,
                        fallback: d.fallback,
                    });
                }
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        completed += entries.len();
        journal.append(&entries)?;
        if let Some(source) = failure {
            return Err(RagError::Llm { source, completed });
        }
    }
    Ok(out.into_iter().map(|d| d.expect("every query decided")).collect())
}

/// Asks the generator about every (source, target) pair and keeps the pairs
/// whose completion maps to the mapper's first label.
pub fn align_llm_pairwise(
    src: &EncodedCorpus,
    tgt: &EncodedCorpus,
    cfg: &RagConfig,
    mapper: &LabelMapperConfig,
    client: &LlmClient,
) -> Result<Vec<Correspondence>, RagError> {
    let pairs = src.len().saturating_mul(tgt.len());
    if pairs > cfg.pair_cap {
        return Err(RagError::PairCapExceeded { pairs, cap: cfg.pair_cap });
    }
    cfg.validate()?;
    mapper.validate().map_err(RagError::InvalidConfig)?;
    let positive = mapper.labels[0].clone();

    let index: Vec<(usize, usize)> = (0..src.len()).flat_map(|i| (0..tgt.len()).map(move |j| (i, j))).collect();
    let qs = queries(src, tgt, &index, cfg)?;
    let decisions = run_decisions(src, tgt, &qs, cfg.journal.as_deref(), client.config().batch_size, |items| {
        client
            .complete_all(items)
            .into_iter()
            .map(|r| {
                r.map(|text| {
                    let (label, confidence) = map_label(&text, mapper);
                    let label = if label == positive { DecisionLabel::Yes } else { DecisionLabel::No };
                    Decision { label, confidence, fallback: false }
                })
            })
            .collect()
    })?;

    Ok(qs
        .iter()
        .zip(decisions)
        .filter(|(_, d)| d.label == DecisionLabel::Yes)
        .map(|(q, d)| Correspondence::new(&src.iris[q.src], &tgt.iris[q.tgt], d.confidence, "llm"))
        .collect())
}

pub fn align_rag(src: &Ontology, tgt: &Ontology, cfg: &RagConfig) -> Result<Vec<Correspondence>, RagError> {
    let client = LlmClient::from_config(cfg.llm.clone());
    align_rag_with(src, tgt, cfg, &client, None, Execution::default())
}

/// Retrieval over the `C` view, then one yes/no decision per candidate.
///
/// Output is ordered by source, then descending confidence, then target IRI.
pub fn align_rag_with(
    src: &Ontology,
    tgt: &Ontology,
    cfg: &RagConfig,
    client: &LlmClient,
    provider: Option<&dyn EmbeddingProvider>,
    exec: Execution,
) -> Result<Vec<Correspondence>, RagError> {
    cfg.validate()?;
    let s = encode(src, cfg.view, EncodeTarget::Rag)?;
    let t = encode(tgt, cfg.view, EncodeTarget::Rag)?;
    let cands = candidates(&s, &t, &cfg.retrieval, provider, exec)?;
    let pairs: Vec<(usize, usize)> = cands
        .lists
        .iter()
        .enumerate()
        .flat_map(|(i, list)| {
            list.iter().filter(|(_, score)| *score >= cfg.retrieval.threshold).map(move |&(j, _)| (i, j))
        })
        .collect();

    let qs = queries(&s, &t, &pairs, cfg)?;
    let decisions = run_decisions(&s, &t, &qs, cfg.journal.as_deref(), client.config().batch_size, |items| {
        client.decide_all(items, ("yes", "no"))
    })?;

    let provenance = if cfg.shots > 0 { "fewshot_rag" } else { "rag" };
    let mut kept: Vec<(usize, f64, &str, usize)> = qs
        .iter()
        .zip(&decisions)
        .filter(|(_, d)| d.confidence >= cfg.llm_threshold && (!d.fallback || d.label == DecisionLabel::Yes))
        .map(|(q, d)| (q.src, d.confidence, t.iris[q.tgt].as_str(), q.tgt))
        .collect();
    kept.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then_with(|| a.2.cmp(b.2)));
    Ok(kept.into_iter().map(|(i, c, _, j)| Correspondence::new(&s.iris[i], &t.iris[j], c, provenance)).collect())
}
