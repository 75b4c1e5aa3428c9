//! OAEI alignment XML and JSON serialization.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use quick_xml::escape::escape;
use thiserror::Error;

use crate::alignment::Correspondence;
use crate::parser::ReferenceAlignment;

pub const ALIGNMENT_NS: &str = "http://knowledgeweb.semanticweb.org/heterogeneity/alignment#";
const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cell {index} has score {score} outside [0, 1]")]
    InvalidScore { index: usize, score: f64 },
    #[error("invalid alignment JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentDocument {
    pub onto1: String,
    pub onto2: String,
    pub cells: Vec<Correspondence>,
    pub level: String,
    pub kind: String,
}

impl AlignmentDocument {
    pub fn new(onto1: impl Into<String>, onto2: impl Into<String>, cells: Vec<Correspondence>) -> Self {
        Self { onto1: onto1.into(), onto2: onto2.into(), cells, level: "0".into(), kind: "??".into() }
    }

    /// Document view of a parsed alignment file.
    pub fn from_reference(r: &ReferenceAlignment, provenance: &str) -> Self {
        let cells = r
            .cells
            .iter()
            .map(|c| Correspondence {
                source: c.entity1.clone(),
                target: c.entity2.clone(),
                relation: c.relation.clone(),
                score: c.measure,
                provenance: provenance.to_string(),
            })
            .collect();
        Self::new(r.onto1.clone().unwrap_or_default(), r.onto2.clone().unwrap_or_default(), cells)
    }
}

/// Decimal rendering with at most six fractional digits and no exponent.
pub fn format_measure(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

pub fn export_xml(doc: &AlignmentDocument) -> Result<Vec<u8>, ExportError> {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="utf-8"?>"#);
    let _ = writeln!(out, r#"<rdf:RDF xmlns="{ALIGNMENT_NS}""#);
    let _ = writeln!(out, r#"         xmlns:rdf="{RDF_NS}""#);
    let _ = writeln!(out, r#"         xmlns:xsd="{XSD_NS}">"#);
    let _ = writeln!(out, "<Alignment>");
    let _ = writeln!(out, "  <xml>yes</xml>");
    let _ = writeln!(out, "  <level>{}</level>", escape(&doc.level));
    let _ = writeln!(out, "  <type>{}</type>", escape(&doc.kind));
    let _ = writeln!(out, "  <onto1>{}</onto1>", escape(&doc.onto1));
    let _ = writeln!(out, "  <onto2>{}</onto2>", escape(&doc.onto2));
    for (index, c) in doc.cells.iter().enumerate() {
        if !(0.0..=1.0).contains(&c.score) {
            return Err(ExportError::InvalidScore { index, score: c.score });
        }
        let _ = writeln!(out, "  <map>");
        let _ = writeln!(out, "    <Cell>");
        let _ = writeln!(out, r#"      <entity1 rdf:resource="{}"/>"#, escape(&c.source));
        let _ = writeln!(out, r#"      <entity2 rdf:resource="{}"/>"#, escape(&c.target));
        let _ = writeln!(out, "      <relation>{}</relation>", escape(&c.relation));
        let _ = writeln!(out, r#"      <measure rdf:datatype="{XSD_NS}float">{}</measure>"#, format_measure(c.score));
        let _ = writeln!(out, "    </Cell>");
        let _ = writeln!(out, "  </map>");
    }
    let _ = writeln!(out, "</Alignment>");
    let _ = writeln!(out, "</rdf:RDF>");
    Ok(out.into_bytes())
}

pub fn export_json(doc: &AlignmentDocument) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&doc.cells).expect("correspondences serialize");
    bytes.push(b'\n');
    bytes
}

pub fn read_json(bytes: &[u8]) -> Result<Vec<Correspondence>, ExportError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place, so readers never see a partial file. Missing parent directories
/// are created.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ExportError::Io(e.error))?;
    Ok(())
}
