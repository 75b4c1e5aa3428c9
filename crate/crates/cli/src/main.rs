//! `ontomatch` command-line interface.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors, 2 when a
//! run fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ontomatch::evaluator::{compare, evaluate, RunSummary};
use ontomatch::exporter::{export_json, export_xml, read_json, write_atomic, AlignmentDocument};
use ontomatch::fuzzy::{FuzzyConfig, FuzzyMethod};
use ontomatch::parser::reference::parse_reference_alignment_str;
use ontomatch::pipeline::{ConfigError, Method, OutputConfig, OutputFormat, PipelineConfig, PostprocessConfig};
use ontomatch::postprocess::CardinalityPolicy;
use ontomatch::rag::RagConfig;
use ontomatch::retrieval::{RetrievalBackend, RetrievalConfig};
use ontomatch::{run_pipeline, Correspondence, EncodingView, ReferenceAlignment, RunReport};

#[derive(Parser)]
#[command(name = "ontomatch", version, about = "Ontology alignment toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align two ontologies.
    Align(Box<AlignArgs>),
    /// Score a predicted alignment against a reference.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
    },
    /// Convert an alignment between OAEI XML and JSON.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: String,
        /// Source ontology identifier for XML output.
        #[arg(long)]
        onto1: Option<String>,
        /// Target ontology identifier for XML output.
        #[arg(long)]
        onto2: Option<String>,
    },
    /// Tabulate run reports by F1.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Default)]
struct AlignArgs {
    /// JSON pipeline config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// fuzzy, retrieval, llm, rag or fewshot_rag.
    #[arg(long)]
    method: Option<String>,
    /// C, CC or CP.
    #[arg(long)]
    view: Option<String>,
    /// Matcher threshold T (fuzzy, retrieval); post-filter for LLM methods.
    #[arg(long)]
    threshold: Option<f64>,
    /// Retrieval threshold T_r for RAG.
    #[arg(long)]
    tr: Option<f64>,
    /// LLM confidence threshold T_l.
    #[arg(long)]
    tl: Option<f64>,
    #[arg(long)]
    topk: Option<usize>,
    /// Few-shot examples per prompt.
    #[arg(long)]
    ns: Option<usize>,
    /// Requests per batch.
    #[arg(long)]
    batch: Option<usize>,
    /// LLM endpoint (embedding endpoint for `retrieval`), or `mock`.
    #[arg(long)]
    endpoint: Option<String>,
    /// Embedding endpoint of the retriever, or `mock`.
    #[arg(long = "embedding-endpoint")]
    embedding_endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// tfidf or embedding.
    #[arg(long)]
    backend: Option<String>,
    /// simple, token_set or weighted.
    #[arg(long = "fuzzy-method")]
    fuzzy_method: Option<String>,
    /// many_to_many or one_to_one_greedy.
    #[arg(long)]
    cardinality: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// xml or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Align(args) => align(*args),
        Command::Eval { pred, reference } => eval(&pred, &reference),
        Command::Convert { input, out, format, onto1, onto2 } => convert(&input, &out, &format, onto1, onto2),
        Command::Compare { reports, json } => compare_reports(&reports, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {}", one_line(&m));
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {}", one_line(&m));
            ExitCode::from(2)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_flag<T: serde::de::DeserializeOwned>(name: &str, value: &str) -> Result<T, Failure> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| Failure::Config(format!("invalid --{name} value {value:?}")))
}

/// Merges flags over the config file (or built-in defaults when there is
/// none).
fn build_config(a: &AlignArgs) -> Result<PipelineConfig, Failure> {
    let method = a.method.as_deref().map(str::parse::<Method>).transpose()?;
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let missing = |flag: &str| Failure::Config(format!("--{flag} is required without --config"));
            let method = method.ok_or_else(|| missing("method"))?;
            PipelineConfig {
                source_path: a.source.clone().ok_or_else(|| missing("source"))?,
                target_path: a.target.clone().ok_or_else(|| missing("target"))?,
                reference_path: None,
                method,
                view: EncodingView::C,
                fuzzy: (method == Method::Fuzzy).then(FuzzyConfig::default),
                retrieval: (method == Method::Retrieval).then(RetrievalConfig::default),
                rag: matches!(method, Method::Llm | Method::Rag | Method::FewshotRag).then(|| RagConfig {
                    shots: if method == Method::FewshotRag { 2 } else { 0 },
                    ..RagConfig::default()
                }),
                postprocess: PostprocessConfig::default(),
                output: OutputConfig { path: a.out.clone().ok_or_else(|| missing("out"))?, format: OutputFormat::Xml },
                seed: 0,
            }
        }
    };

    if let Some(m) = method {
        cfg.method = m;
    }
    if let Some(p) = &a.source {
        cfg.source_path = p.clone();
    }
    if let Some(p) = &a.target {
        cfg.target_path = p.clone();
    }
    if let Some(p) = &a.reference {
        cfg.reference_path = Some(p.clone());
    }
    if let Some(v) = &a.view {
        cfg.view = v.parse().map_err(|e: ontomatch::encoder::EncodeError| Failure::Config(e.to_string()))?;
    }
    if let Some(p) = &a.out {
        cfg.output.path = p.clone();
    }
    if let Some(f) = &a.format {
        cfg.output.format = f.parse()?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(c) = &a.cardinality {
        cfg.postprocess.cardinality = parse_flag::<CardinalityPolicy>("cardinality", c)?;
    }

    match cfg.method {
        Method::Fuzzy => {
            if let Some(f) = cfg.fuzzy.as_mut() {
                if let Some(t) = a.threshold {
                    f.threshold = t;
                }
                if let Some(m) = &a.fuzzy_method {
                    f.method = parse_flag::<FuzzyMethod>("fuzzy-method", m)?;
                }
            }
        }
        Method::Retrieval => {
            if let Some(r) = cfg.retrieval.as_mut() {
                if let Some(t) = a.threshold {
                    r.threshold = t;
                }
                apply_retrieval_flags(r, a)?;
                if let Some(e) = &a.endpoint {
                    r.provider_endpoint = Some(e.clone());
                }
                if let Some(m) = &a.model {
                    r.model = m.clone();
                }
            }
        }
        Method::Llm | Method::Rag | Method::FewshotRag => {
            if let Some(t) = a.threshold {
                cfg.postprocess.threshold = Some(t);
            }
            if let Some(r) = cfg.rag.as_mut() {
                if let Some(t) = a.tr {
                    r.retrieval.threshold = t;
                }
                if let Some(t) = a.tl {
                    r.llm_threshold = t;
                }
                if let Some(n) = a.ns {
                    r.shots = n;
                }
                apply_retrieval_flags(&mut r.retrieval, a)?;
                if let Some(b) = a.batch {
                    r.llm.batch_size = b;
                }
                if let Some(e) = &a.endpoint {
                    r.llm.endpoint = e.clone();
                }
                if let Some(m) = &a.model {
                    r.llm.model_id = m.clone();
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_retrieval_flags(r: &mut RetrievalConfig, a: &AlignArgs) -> Result<(), Failure> {
    if let Some(k) = a.topk {
        r.top_k = k;
    }
    if let Some(b) = a.batch {
        r.batch_size = b;
    }
    if let Some(b) = &a.backend {
        r.backend = parse_flag::<RetrievalBackend>("backend", b)?;
    }
    if let Some(e) = &a.embedding_endpoint {
        r.provider_endpoint = Some(e.clone());
    }
    Ok(())
}

fn align(args: AlignArgs) -> Result<(), Failure> {
    let cfg = build_config(&args)?;
    let report = run_pipeline(&cfg).map_err(|e| match e {
        ontomatch::pipeline::PipelineError::Config(c) => Failure::Config(c.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    print_report(&report);
    Ok(())
}

fn print_report(r: &RunReport) {
    println!("{} correspondences written to {}", r.correspondences, r.output_path.display());
    if let Some(m) = &r.metrics {
        println!("{m}");
    }
    let stages: Vec<String> = r.stages.iter().map(|s| format!("{} {:.1}s", s.stage, s.seconds)).collect();
    println!("time: {} (total {:.1}s)", stages.join(", "), r.total_seconds);
}

/// Reads OAEI XML or the JSON array format, by content.
fn read_alignment(path: &Path) -> Result<(ReferenceAlignment, bool), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('[') {
        let cells = read_json(text.as_bytes()).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        let cells = cells
            .into_iter()
            .map(|c| ontomatch::parser::ReferenceCell {
                entity1: c.source,
                entity2: c.target,
                relation: c.relation,
                measure: c.score,
            })
            .collect();
        Ok((ReferenceAlignment { onto1: None, onto2: None, cells }, true))
    } else {
        let r =
            parse_reference_alignment_str(&text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        Ok((r, false))
    }
}

fn to_correspondences(r: &ReferenceAlignment) -> Vec<Correspondence> {
    AlignmentDocument::from_reference(r, "").cells
}

fn eval(pred: &Path, reference: &Path) -> Result<(), Failure> {
    let (p, _) = read_alignment(pred)?;
    let (r, _) = read_alignment(reference)?;
    let m = evaluate(&to_correspondences(&p), &r);
    println!("{}", serde_json::to_string(&m).expect("metrics serialize"));
    println!("{m}");
    Ok(())
}

fn convert(
    input: &Path,
    out: &Path,
    format: &str,
    onto1: Option<String>,
    onto2: Option<String>,
) -> Result<(), Failure> {
    let format: OutputFormat = format.parse()?;
    let (r, from_json) = read_alignment(input)?;
    let mut doc = AlignmentDocument::from_reference(&r, "");
    if from_json {
        // keep provenance from the JSON cells
        let text = std::fs::read(input).map_err(|e| Failure::Runtime(e.to_string()))?;
        doc.cells = read_json(&text).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    if let Some(o) = onto1 {
        doc.onto1 = o;
    }
    if let Some(o) = onto2 {
        doc.onto2 = o;
    }
    let bytes = match format {
        OutputFormat::Xml => export_xml(&doc).map_err(|e| Failure::Runtime(e.to_string()))?,
        OutputFormat::Json => export_json(&doc),
    };
    write_atomic(out, &bytes).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{} cells written to {}", doc.cells.len(), out.display());
    Ok(())
}

fn compare_reports(paths: &[PathBuf], json: bool) -> Result<(), Failure> {
    let mut runs = Vec::with_capacity(paths.len());
    for p in paths {
        let text = std::fs::read_to_string(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
        let report: RunReport = serde_json::from_str(&text)
            .map_err(|e| Failure::Runtime(format!("{}: not a run report: {e}", p.display())))?;
        let metrics = report.metrics.ok_or_else(|| {
            Failure::Runtime(format!("{}: report has no metrics (run without a reference)", p.display()))
        })?;
        let name =
            p.file_name().map(|n| n.to_string_lossy().trim_end_matches(".report.json").to_string()).unwrap_or_default();
        runs.push(RunSummary { name, metrics, seconds: report.total_seconds });
    }
    let table = compare(runs);
    if json {
        println!("{}", serde_json::to_string_pretty(&table.to_json()).expect("table serializes"));
    } else {
        print!("{}", table.to_text());
    }
    Ok(())
}
