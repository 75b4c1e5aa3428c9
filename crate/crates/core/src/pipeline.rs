//! End-to-end runs: parse, encode, align, post-process, evaluate, export.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::Correspondence;
use crate::encoder::{encode, EncodeTarget, EncodingView};
use crate::evaluator::{evaluate, Metrics};
use crate::exporter::{export_json, export_xml, write_atomic, AlignmentDocument};
use crate::fuzzy::{align_fuzzy, FuzzyConfig};
use crate::llm::LlmClient;
use crate::parser::{parse_ontology, parse_reference_alignment};
use crate::postprocess::{cardinality_filter, threshold_filter, CardinalityPolicy, LabelMapperConfig};
use crate::rag::{align_llm_pairwise, align_rag, load_exemplars, RagConfig};
use crate::retrieval::{align_retrieval, RetrievalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fuzzy,
    Retrieval,
    Llm,
    Rag,
    FewshotRag,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fuzzy => "fuzzy",
            Method::Retrieval => "retrieval",
            Method::Llm => "llm",
            Method::Rag => "rag",
            Method::FewshotRag => "fewshot_rag",
        }
    }

    /// Name of the config block this method reads.
    pub fn block(self) -> &'static str {
        match self {
            Method::Fuzzy => "fuzzy",
            Method::Retrieval => "retrieval",
            Method::Llm | Method::Rag | Method::FewshotRag => "rag",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fuzzy" => Ok(Method::Fuzzy),
            "retrieval" => Ok(Method::Retrieval),
            "llm" => Ok(Method::Llm),
            "rag" => Ok(Method::Rag),
            "fewshot_rag" | "fewshot-rag" => Ok(Method::FewshotRag),
            other => Err(ConfigError::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Xml,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xml" | "rdf" => Ok(OutputFormat::Xml),
            "json" => Ok(OutputFormat::Json),
            other => Err(ConfigError::Invalid(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PostprocessConfig {
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub cardinality: CardinalityPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

/// A full run. The top-level `view` applies to every matcher and `seed`
/// replaces the seed of the mock embedding provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub source_path: PathBuf,
    pub target_path: PathBuf,
    #[serde(default)]
    pub reference_path: Option<PathBuf>,
    pub method: Method,
    #[serde(default = "default_view")]
    pub view: EncodingView,
    #[serde(default)]
    pub fuzzy: Option<FuzzyConfig>,
    #[serde(default)]
    pub retrieval: Option<RetrievalConfig>,
    #[serde(default)]
    pub rag: Option<RagConfig>,
    #[serde(default)]
    pub postprocess: PostprocessConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_view() -> EncodingView {
    EncodingView::C
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("method {method} needs a \"{block}\" config block")]
    MissingBlock { method: &'static str, block: &'static str },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err(stage: &'static str) -> impl Fn(&dyn std::fmt::Display) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    /// Checks every rule that needs no file access.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let missing = || ConfigError::MissingBlock { method: self.method.name(), block: self.method.block() };
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        match self.method {
            Method::Fuzzy => self.fuzzy.as_ref().ok_or_else(missing)?.validate().map_err(|e| invalid(&e))?,
            Method::Retrieval => self.retrieval.as_ref().ok_or_else(missing)?.validate().map_err(|e| invalid(&e))?,
            Method::Llm | Method::Rag | Method::FewshotRag => {
                let rag = self.rag.as_ref().ok_or_else(missing)?;
                let deferred = rag.exemplars.is_none() && rag.exemplars_path.is_some();
                self.effective_rag(rag).validate_params(!deferred).map_err(|e| invalid(&e))?;
                if self.method == Method::Rag && rag.shots > 0 {
                    return Err(ConfigError::Invalid("method rag takes no shots; use fewshot_rag".into()));
                }
                if self.method == Method::FewshotRag && rag.shots == 0 {
                    return Err(ConfigError::Invalid("method fewshot_rag needs shots >= 1".into()));
                }
            }
        }
        if let Some(t) = self.postprocess.threshold {
            if t.is_nan() || t < 0.0 {
                return Err(ConfigError::Invalid(format!("postprocess threshold {t} below 0")));
            }
        }
        if self.output.path.as_os_str().is_empty() {
            return Err(ConfigError::Invalid("output path is empty".into()));
        }
        Ok(())
    }

    fn effective_rag(&self, rag: &RagConfig) -> RagConfig {
        let mut r = rag.clone();
        r.view = self.view;
        r.retrieval.seed = self.seed;
        r
    }
}

/// Path of the report written next to an alignment file.
pub fn report_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_os_string();
    s.push(".report.json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub correspondences: usize,
    /// Present iff a reference alignment was given.
    pub metrics: Option<Metrics>,
    /// Wall-clock seconds per stage, one decimal.
    pub stages: Vec<StageTime>,
    pub total_seconds: f64,
    pub output_path: PathBuf,
}

impl RunReport {
    /// The report with every timing zeroed, for run-to-run comparison.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for s in &mut r.stages {
            s.seconds = 0.0;
        }
        r.total_seconds = 0.0;
        r
    }
}

fn round1(s: f64) -> f64 {
    (s * 10.0).round() / 10.0
}

struct Timer {
    stages: Vec<StageTime>,
    start: Instant,
    total: f64,
}

impl Timer {
    fn new() -> Self {
        Self { stages: Vec::new(), start: Instant::now(), total: 0.0 }
    }

    fn lap(&mut self, stage: &str) {
        let secs = self.start.elapsed().as_secs_f64();
        self.total += secs;
        self.stages.push(StageTime { stage: stage.into(), seconds: round1(secs) });
        self.start = Instant::now();
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let mut timer = Timer::new();

    let src = parse_ontology(&cfg.source_path, None).map_err(|e| stage_err("parse")(&e))?;
    let tgt = parse_ontology(&cfg.target_path, None).map_err(|e| stage_err("parse")(&e))?;
    let reference = match &cfg.reference_path {
        Some(p) => Some(parse_reference_alignment(p).map_err(|e| stage_err("parse")(&e))?),
        None => None,
    };
    timer.lap("parse");

    let raw: Vec<Correspondence> = match cfg.method {
        Method::Fuzzy | Method::Retrieval | Method::Llm => {
            let target = if cfg.method == Method::Llm { EncodeTarget::Llm } else { EncodeTarget::Lightweight };
            let s = encode(&src, cfg.view, target).map_err(|e| stage_err("encode")(&e))?;
            let t = encode(&tgt, cfg.view, target).map_err(|e| stage_err("encode")(&e))?;
            timer.lap("encode");
            let align = stage_err("align");
            let out = match cfg.method {
                Method::Fuzzy => align_fuzzy(&s, &t, cfg.fuzzy.as_ref().expect("validated")).map_err(|e| align(&e))?,
                Method::Retrieval => {
                    let mut r = cfg.retrieval.clone().expect("validated");
                    r.seed = cfg.seed;
                    align_retrieval(&s, &t, &r).map_err(|e| align(&e))?
                }
                _ => {
                    let rag = load_rag(cfg)?;
                    let client = LlmClient::from_config(rag.llm.clone());
                    align_llm_pairwise(&s, &t, &rag, &LabelMapperConfig::default(), &client).map_err(|e| align(&e))?
                }
            };
            timer.lap("align");
            out
        }
        Method::Rag | Method::FewshotRag => {
            // encoding happens inside the matcher
            let rag = load_rag(cfg)?;
            let out = align_rag(&src, &tgt, &rag).map_err(|e| stage_err("align")(&e))?;
            timer.lap("align");
            out
        }
    };

    let mut corrs = raw;
    if let Some(t) = cfg.postprocess.threshold {
        corrs = threshold_filter(&corrs, t);
    }
    let corrs = cardinality_filter(&corrs, cfg.postprocess.cardinality);
    timer.lap("postprocess");

    let metrics = reference.as_ref().map(|r| evaluate(&corrs, r));
    if metrics.is_some() {
        timer.lap("evaluate");
    }

    let doc = AlignmentDocument::new(src.source_path.clone(), tgt.source_path.clone(), corrs);
    let bytes = match cfg.output.format {
        OutputFormat::Xml => export_xml(&doc).map_err(|e| stage_err("export")(&e))?,
        OutputFormat::Json => export_json(&doc),
    };
    write_atomic(&cfg.output.path, &bytes).map_err(|e| stage_err("export")(&e))?;
    timer.lap("export");

    let report = RunReport {
        config: cfg.clone(),
        correspondences: doc.cells.len(),
        metrics,
        total_seconds: round1(timer.total),
        stages: timer.stages,
        output_path: cfg.output.path.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&report).expect("reports serialize");
    json.push(b'\n');
    write_atomic(&report_path(&cfg.output.path), &json).map_err(|e| stage_err("export")(&e))?;
    Ok(report)
}

fn load_rag(cfg: &PipelineConfig) -> Result<RagConfig, PipelineError> {
    let mut rag = cfg.effective_rag(cfg.rag.as_ref().expect("validated"));
    if rag.exemplars.is_none() {
        if let Some(p) = &rag.exemplars_path {
            rag.exemplars = Some(load_exemplars(p).map_err(|e| stage_err("align")(&e))?);
        }
    }
    rag.validate().map_err(|e| stage_err("align")(&e))?;
    Ok(rag)
}
