//! Ontology and reference-alignment loading.
//!
//! RDF/XML and Turtle documents are read into triples with `rio`, then folded
//! into one [`ConceptRecord`] per named class. Reference alignments in the
//! OAEI alignment format are handled by [`reference`].

mod label;
pub mod reference;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rio_api::model::{Literal, Subject, Term, Triple};
use rio_api::parser::TriplesParser;
use rio_turtle::TurtleParser;
use rio_xml::RdfXmlParser;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use label::derive_label;
pub use reference::{parse_reference_alignment, parse_reference_alignment_str, ReferenceAlignment, ReferenceCell};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";
const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
const OWL_THING: &str = "http://www.w3.org/2002/07/owl#Thing";
const OWL_NOTHING: &str = "http://www.w3.org/2002/07/owl#Nothing";
const SKOS_PREF_LABEL: &str = "http://www.w3.org/2004/02/skos/core#prefLabel";
const SKOS_ALT_LABEL: &str = "http://www.w3.org/2004/02/skos/core#altLabel";
const OBO_EXACT_SYNONYM: &str = "http://www.geneontology.org/formats/oboInOwl#hasExactSynonym";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("malformed document {path}: {message}")]
    MalformedDocument { path: String, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("cell {index} lacks {missing}")]
    MissingEntity { index: usize, missing: &'static str },
    #[error("i/o error reading {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Serialization of an ontology document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OntologyFormat {
    #[serde(rename = "rdf-xml")]
    RdfXml,
    #[serde(rename = "turtle")]
    Turtle,
}

impl FromStr for OntologyFormat {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rdf-xml" | "rdfxml" | "xml" | "rdf" | "owl" => Ok(Self::RdfXml),
            "turtle" | "ttl" | "nt" => Ok(Self::Turtle),
            other => Err(ParseError::UnsupportedFormat(other.to_string())),
        }
    }
}

impl fmt::Display for OntologyFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RdfXml => "rdf-xml",
            Self::Turtle => "turtle",
        })
    }
}

/// A named class with the metadata the encoders need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptRecord {
    pub iri: String,
    pub label: String,
    pub synonyms: Vec<String>,
    pub comment: Option<String>,
    /// Named superclasses, IRI-sorted.
    pub parents: Vec<String>,
    /// Named subclasses, IRI-sorted.
    pub children: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    /// Sorted by ascending IRI.
    pub concepts: Vec<ConceptRecord>,
    pub source_path: String,
    pub format: OntologyFormat,
}

impl Ontology {
    /// Builds an ontology from records, restoring every structural invariant:
    /// IRI-sorted concepts, dangling or self links dropped, parent/child
    /// symmetry.
    pub fn from_records(
        records: impl IntoIterator<Item = ConceptRecord>,
        source_path: impl Into<String>,
        format: OntologyFormat,
    ) -> Self {
        let mut by_iri: BTreeMap<String, ConceptRecord> = BTreeMap::new();
        for rec in records {
            by_iri.entry(rec.iri.clone()).or_insert(rec);
        }

        let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
        for rec in by_iri.values() {
            for p in &rec.parents {
                edges.insert((rec.iri.clone(), p.clone()));
            }
            for c in &rec.children {
                edges.insert((c.clone(), rec.iri.clone()));
            }
        }
        for rec in by_iri.values_mut() {
            rec.parents.clear();
            rec.children.clear();
        }
        for (child, parent) in edges {
            if child == parent || !by_iri.contains_key(&child) || !by_iri.contains_key(&parent) {
                continue;
            }
            by_iri.get_mut(&child).unwrap().parents.push(parent.clone());
            by_iri.get_mut(&parent).unwrap().children.push(child);
        }
        for rec in by_iri.values_mut() {
            rec.parents.sort();
            rec.children.sort();
            if rec.label.trim().is_empty() {
                rec.label = derive_label(&rec.iri);
            }
        }

        Self { concepts: by_iri.into_values().collect(), source_path: source_path.into(), format }
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn index_of(&self, iri: &str) -> Option<usize> {
        self.concepts.binary_search_by(|c| c.iri.as_str().cmp(iri)).ok()
    }

    pub fn get(&self, iri: &str) -> Option<&ConceptRecord> {
        self.index_of(iri).map(|i| &self.concepts[i])
    }
}

/// Loads every named class of an RDF/XML or Turtle document.
///
/// The format is taken from `format` when given, otherwise from the file
/// extension, otherwise sniffed from the first bytes.
pub fn parse_ontology(path: impl AsRef<Path>, format: Option<OntologyFormat>) -> Result<Ontology, ParseError> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => detect_format(path)?,
    };
    let file = open(path)?;
    let base = base_iri(path);
    parse_ontology_reader(BufReader::new(file), format, base, &path.display().to_string())
}

/// Parses an ontology from an in-memory document.
pub fn parse_ontology_str(doc: &str, format: OntologyFormat, source_path: &str) -> Result<Ontology, ParseError> {
    parse_ontology_reader(doc.as_bytes(), format, None, source_path)
}

fn parse_ontology_reader<R: BufRead>(
    reader: R,
    format: OntologyFormat,
    base: Option<oxiri::Iri<String>>,
    source_path: &str,
) -> Result<Ontology, ParseError> {
    let mut collector = Collector::default();
    let malformed = |message: String| ParseError::MalformedDocument { path: source_path.to_string(), message };
    match format {
        OntologyFormat::RdfXml => RdfXmlParser::new(reader, base)
            .parse_all(&mut |t| -> Result<(), rio_xml::RdfXmlError> {
                collector.add(&t);
                Ok(())
            })
            .map_err(|e| malformed(e.to_string()))?,
        OntologyFormat::Turtle => TurtleParser::new(reader, base)
            .parse_all(&mut |t| -> Result<(), rio_turtle::TurtleError> {
                collector.add(&t);
                Ok(())
            })
            .map_err(|e| malformed(e.to_string()))?,
    }
    Ok(collector.finish(source_path, format))
}

fn detect_format(path: &Path) -> Result<OntologyFormat, ParseError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => ext.parse(),
        None => {
            let mut buf = Vec::new();
            open(path)?
                .take(512)
                .read_to_end(&mut buf)
                .map_err(|source| ParseError::Io { path: path.to_path_buf(), source })?;
            let head = String::from_utf8_lossy(&buf);
            let head = head.trim_start();
            if head.starts_with("<?xml") || head.starts_with("<rdf:RDF") {
                Ok(OntologyFormat::RdfXml)
            } else {
                Ok(OntologyFormat::Turtle)
            }
        }
    }
}

pub(crate) fn open(path: &Path) -> Result<File, ParseError> {
    File::open(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => ParseError::FileNotFound(path.to_path_buf()),
        _ => ParseError::Io { path: path.to_path_buf(), source },
    })
}

fn base_iri(path: &Path) -> Option<oxiri::Iri<String>> {
    let abs = std::fs::canonicalize(path).ok()?;
    oxiri::Iri::parse(format!("file://{}", abs.display())).ok()
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum LabelKind {
    Rdfs,
    SkosPref,
    Synonym,
}

#[derive(Default)]
struct Collector {
    classes: BTreeSet<String>,
    labels: HashMap<String, Vec<(LabelKind, String)>>,
    comments: HashMap<String, String>,
    parents: HashMap<String, Vec<String>>,
}

impl Collector {
    fn add(&mut self, t: &Triple<'_>) {
        let Subject::NamedNode(subject) = t.subject else {
            return;
        };
        let subject = subject.iri;
        match (t.predicate.iri, &t.object) {
            (RDF_TYPE, Term::NamedNode(o)) if o.iri == OWL_CLASS || o.iri == RDFS_CLASS => {
                self.classes.insert(subject.to_string());
            }
            (RDFS_SUBCLASS_OF, Term::NamedNode(o)) => {
                self.classes.insert(subject.to_string());
                self.classes.insert(o.iri.to_string());
                self.parents.entry(subject.to_string()).or_default().push(o.iri.to_string());
            }
            (RDFS_SUBCLASS_OF, _) => {
                // superclass is a class expression; the subject is still a class
                self.classes.insert(subject.to_string());
            }
            (RDFS_LABEL, Term::Literal(l)) => self.label(subject, LabelKind::Rdfs, l),
            (SKOS_PREF_LABEL, Term::Literal(l)) => self.label(subject, LabelKind::SkosPref, l),
            (SKOS_ALT_LABEL | OBO_EXACT_SYNONYM, Term::Literal(l)) => self.label(subject, LabelKind::Synonym, l),
            (RDFS_COMMENT, Term::Literal(l)) => {
                self.comments.entry(subject.to_string()).or_insert_with(|| literal_value(l).trim().to_string());
            }
            _ => {}
        }
    }

    fn label(&mut self, subject: &str, kind: LabelKind, lit: &Literal<'_>) {
        let value = literal_value(lit).trim();
        if !value.is_empty() {
            self.labels.entry(subject.to_string()).or_default().push((kind, value.to_string()));
        }
    }

    fn finish(mut self, source_path: &str, format: OntologyFormat) -> Ontology {
        self.classes.remove(OWL_THING);
        self.classes.remove(OWL_NOTHING);
        let records: Vec<ConceptRecord> = self
            .classes
            .iter()
            .map(|iri| {
                let mut entries = self.labels.remove(iri).unwrap_or_default();
                // stable: document order within each kind
                entries.sort_by_key(|(kind, _)| *kind);
                // synonyms never become the label; the fragment comes first
                let label = match entries.first() {
                    Some((kind, _)) if *kind != LabelKind::Synonym => entries.remove(0).1,
                    _ => derive_label(iri),
                };
                let names = entries.into_iter().map(|(_, v)| v);
                let mut synonyms: Vec<String> = Vec::new();
                for name in names {
                    if name != label && !synonyms.contains(&name) {
                        synonyms.push(name);
                    }
                }
                let mut parents = self.parents.remove(iri).unwrap_or_default();
                parents.sort();
                parents.dedup();
                ConceptRecord {
                    iri: iri.clone(),
                    label,
                    synonyms,
                    comment: self.comments.remove(iri),
                    parents,
                    children: Vec::new(),
                }
            })
            .collect();
        Ontology::from_records(records, source_path, format)
    }
}

fn literal_value<'a>(lit: &Literal<'a>) -> &'a str {
    match *lit {
        Literal::Simple { value } => value,
        Literal::LanguageTaggedString { value, .. } => value,
        Literal::Typed { value, .. } => value,
    }
}
