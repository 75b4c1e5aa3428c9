//! Concept rendering under the `C`, `CC` and `CP` views.
//!
//! Text templates:
//!
//! | view | text |
//! |------|------|
//! | `C`  | `{label}` |
//! | `CC` | `{label}, children: {c1}, {c2}, ...` |
//! | `CP` | `{label}, parents: {p1}, {p2}, ...` |
//!
//! Related labels follow IRI order and are capped at [`RELATED_CAP`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::Ontology;
use crate::text::{is_separator, split_camel_case};

/// Maximum number of child or parent labels rendered per concept.
pub const RELATED_CAP: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("ontology has no concepts")]
    EmptyOntology,
    #[error("unknown encoding view {0:?} (expected C, CC or CP)")]
    UnknownView(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingView {
    /// Label only.
    C,
    /// Label plus children.
    CC,
    /// Label plus parents.
    CP,
}

impl EncodingView {
    fn relation_word(self) -> Option<&'static str> {
        match self {
            EncodingView::C => None,
            EncodingView::CC => Some("children"),
            EncodingView::CP => Some("parents"),
        }
    }
}

impl FromStr for EncodingView {
    type Err = EncodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "C" => Ok(Self::C),
            "CC" => Ok(Self::CC),
            "CP" => Ok(Self::CP),
            _ => Err(EncodeError::UnknownView(s.to_string())),
        }
    }
}

impl fmt::Display for EncodingView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Which consumer the corpus is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeTarget {
    Lightweight,
    Llm,
    /// Retriever texts use the `C` view (with synonyms); the structured
    /// records follow the requested view.
    Rag,
}

/// Prompt-placeholder fields for one concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredConcept {
    pub concept_label: String,
    /// Children (CC) or parents (CP) labels; empty for C.
    pub related_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCorpus {
    pub view: EncodingView,
    pub iris: Vec<String>,
    pub texts: Vec<String>,
    pub structured: Vec<StructuredConcept>,
}

impl EncodedCorpus {
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

/// Lowercases, folds `_`/`-`/unicode dashes to spaces, splits camelCase and
/// collapses whitespace.
pub fn normalize(text: &str) -> String {
    let split = split_camel_case(text);
    let folded: String = split.chars().map(|c| if is_separator(c) { ' ' } else { c }).collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn encode(ontology: &Ontology, view: EncodingView, target: EncodeTarget) -> Result<EncodedCorpus, EncodeError> {
    if ontology.is_empty() {
        return Err(EncodeError::EmptyOntology);
    }

    let label_of = |iri: &str| -> String {
        ontology.get(iri).map(|c| clean_label(&c.label, iri)).unwrap_or_else(|| normalize(iri))
    };

    let mut iris = Vec::with_capacity(ontology.len());
    let mut texts = Vec::with_capacity(ontology.len());
    let mut structured = Vec::with_capacity(ontology.len());
    for concept in &ontology.concepts {
        let label = clean_label(&concept.label, &concept.iri);
        let related_iris: &[String] = match view {
            EncodingView::C => &[],
            EncodingView::CC => &concept.children,
            EncodingView::CP => &concept.parents,
        };
        // parents/children are IRI-sorted by the parser
        let related: Vec<String> = related_iris.iter().take(RELATED_CAP).map(|iri| label_of(iri)).collect();

        let text = match target {
            EncodeTarget::Rag => {
                let synonyms: Vec<String> =
                    concept.synonyms.iter().map(|s| normalize(s)).filter(|s| !s.is_empty() && *s != label).collect();
                if synonyms.is_empty() {
                    label.clone()
                } else {
                    format!("{label} ({})", synonyms.join("; "))
                }
            }
            EncodeTarget::Lightweight | EncodeTarget::Llm => render(&label, view, &related),
        };
        iris.push(concept.iri.clone());
        texts.push(text);
        structured.push(StructuredConcept { concept_label: label, related_labels: related });
    }

    Ok(EncodedCorpus { view, iris, texts, structured })
}

/// Renders a concept under `view` from its label and related labels.
pub fn render(label: &str, view: EncodingView, related: &[String]) -> String {
    match view.relation_word() {
        Some(word) if !related.is_empty() => format!("{label}, {word}: {}", related.join(", ")),
        _ => label.to_string(),
    }
}

fn clean_label(label: &str, iri: &str) -> String {
    let n = normalize(label);
    if n.is_empty() {
        normalize(iri)
    } else {
        n
    }
}
