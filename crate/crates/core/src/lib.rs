//! Ontology alignment toolkit.
//!
//! The crate is organised as a chain of stages that can be used one at a time
//! or through [`pipeline::run_pipeline`]:
//!
//! - [`parser`] loads OWL/RDF ontologies and OAEI reference alignments.
//! - [`encoder`] renders concepts as text under the `C`, `CC` and `CP` views.
//! - [`fuzzy`], [`retrieval`] and [`rag`] produce correspondences.
//! - [`llm`] is the client layer used by the LLM and RAG matchers.
//! - [`postprocess`] filters matcher output and maps generated text to labels.
//! - [`evaluator`] scores predictions against references.
//! - [`exporter`] writes OAEI alignment XML and JSON.
//!
//! Inner scoring loops run on rayon when the `parallel` feature is enabled
//! (the default); see [`par`].

pub mod alignment;
pub mod encoder;
pub mod evaluator;
pub mod exporter;
pub mod fuzzy;
mod http;
pub mod llm;
pub mod par;
pub mod parser;
pub mod pipeline;
pub mod postprocess;
pub mod rag;
pub mod retrieval;
pub mod text;

pub use alignment::Correspondence;
pub use encoder::{encode, EncodeTarget, EncodedCorpus, EncodingView};
pub use evaluator::{evaluate, Metrics};
pub use http::API_KEY_ENV;
pub use parser::{parse_ontology, parse_reference_alignment, ConceptRecord, Ontology, ReferenceAlignment};
pub use pipeline::{run_pipeline, PipelineConfig, RunReport};
