//! Reader for OAEI alignment documents (`Alignment` / `map` / `Cell`).
//!
//! Elements are matched by local name so documents written with either the
//! `...alignment` or `...alignment#` default namespace are accepted.

use std::collections::HashSet;
use std::io::{BufRead, BufReader};
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::{open, ParseError};
use crate::alignment::EQUIVALENCE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCell {
    pub entity1: String,
    pub entity2: String,
    pub relation: String,
    pub measure: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceAlignment {
    pub onto1: Option<String>,
    pub onto2: Option<String>,
    /// Document order, duplicates (same entity1, entity2, relation) removed.
    pub cells: Vec<ReferenceCell>,
}

impl ReferenceAlignment {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

pub fn parse_reference_alignment(path: impl AsRef<Path>) -> Result<ReferenceAlignment, ParseError> {
    let path = path.as_ref();
    let file = open(path)?;
    read_alignment(BufReader::new(file), &path.display().to_string())
}

pub fn parse_reference_alignment_str(doc: &str) -> Result<ReferenceAlignment, ParseError> {
    read_alignment(doc.as_bytes(), "<memory>")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Entity1,
    Entity2,
    Relation,
    Measure,
    Onto1,
    Onto2,
}

#[derive(Default)]
struct CellBuilder {
    entity1: Option<String>,
    entity2: Option<String>,
    relation: Option<String>,
    measure: Option<String>,
}

fn read_alignment<R: BufRead>(reader: R, source: &str) -> Result<ReferenceAlignment, ParseError> {
    let mut reader = Reader::from_reader(reader);
    reader.config_mut().trim_text(true);

    let malformed = |message: String| ParseError::MalformedDocument { path: source.to_string(), message };

    let mut out = ReferenceAlignment::default();
    let mut seen: HashSet<(String, String, String)> = HashSet::new();
    let mut saw_alignment = false;
    let mut cell: Option<CellBuilder> = None;
    let mut field: Option<Field> = None;
    let mut cell_index = 0usize;
    let mut buf = Vec::new();

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| malformed(format!("{e} at byte {}", reader.error_position())))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = e.local_name();
                match name.as_ref() {
                    b"Alignment" => saw_alignment = true,
                    b"Cell" => {
                        cell = Some(CellBuilder::default());
                        if is_empty {
                            finish_cell(&mut cell, &mut cell_index, &mut seen, &mut out)?;
                        }
                    }
                    b"onto1" | b"onto2" => {
                        field = Some(if name.as_ref() == b"onto1" { Field::Onto1 } else { Field::Onto2 });
                        if is_empty {
                            field = None;
                        }
                    }
                    b"Ontology" => {
                        if let Some(about) = attr(e, b"about").map_err(&malformed)? {
                            match field {
                                Some(Field::Onto1) => out.onto1 = Some(about),
                                Some(Field::Onto2) => out.onto2 = Some(about),
                                _ => {}
                            }
                        }
                    }
                    b"entity1" | b"entity2" | b"relation" | b"measure" if cell.is_some() => {
                        let f = match name.as_ref() {
                            b"entity1" => Field::Entity1,
                            b"entity2" => Field::Entity2,
                            b"relation" => Field::Relation,
                            _ => Field::Measure,
                        };
                        if let Some(resource) = attr(e, b"resource").map_err(&malformed)? {
                            set_field(cell.as_mut().unwrap(), f, resource);
                        }
                        field = if is_empty { None } else { Some(f) };
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| malformed(e.to_string()))?.trim().to_string();
                if text.is_empty() {
                    // nothing
                } else if let Some(f) = field {
                    match f {
                        Field::Onto1 => out.onto1 = Some(text),
                        Field::Onto2 => out.onto2 = Some(text),
                        _ => {
                            if let Some(c) = cell.as_mut() {
                                set_field(c, f, text);
                            }
                        }
                    }
                }
            }
            Event::CData(t) => {
                if let (Some(f), Some(c)) = (field, cell.as_mut()) {
                    set_field(c, f, String::from_utf8_lossy(&t).trim().to_string());
                }
            }
            Event::End(ref e) => match e.local_name().as_ref() {
                b"Cell" => finish_cell(&mut cell, &mut cell_index, &mut seen, &mut out)?,
                b"entity1" | b"entity2" | b"relation" | b"measure" | b"onto1" | b"onto2" => field = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if !saw_alignment {
        return Err(malformed("no Alignment element".to_string()));
    }
    Ok(out)
}

fn set_field(cell: &mut CellBuilder, field: Field, value: String) {
    let slot = match field {
        Field::Entity1 => &mut cell.entity1,
        Field::Entity2 => &mut cell.entity2,
        Field::Relation => &mut cell.relation,
        Field::Measure => &mut cell.measure,
        Field::Onto1 | Field::Onto2 => return,
    };
    if slot.is_none() {
        *slot = Some(value);
    }
}

fn finish_cell(
    cell: &mut Option<CellBuilder>,
    index: &mut usize,
    seen: &mut HashSet<(String, String, String)>,
    out: &mut ReferenceAlignment,
) -> Result<(), ParseError> {
    let Some(c) = cell.take() else {
        return Ok(());
    };
    let i = *index;
    *index += 1;
    let entity1 = c.entity1.ok_or(ParseError::MissingEntity { index: i, missing: "entity1" })?;
    let entity2 = c.entity2.ok_or(ParseError::MissingEntity { index: i, missing: "entity2" })?;
    let relation = c.relation.unwrap_or_else(|| EQUIVALENCE.to_string());
    let measure = match c.measure {
        None => 1.0,
        Some(m) => {
            let v: f64 = m.parse().map_err(|_| ParseError::MalformedDocument {
                path: String::new(),
                message: format!("cell {i}: measure {m:?} is not a number"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(ParseError::MalformedDocument {
                    path: String::new(),
                    message: format!("cell {i}: measure {v} outside [0, 1]"),
                });
            }
            v
        }
    };
    if seen.insert((entity1.clone(), entity2.clone(), relation.clone())) {
        out.cells.push(ReferenceCell { entity1, entity2, relation, measure });
    }
    Ok(())
}

fn attr(e: &BytesStart<'_>, local: &[u8]) -> Result<Option<String>, String> {
    for a in e.attributes() {
        let a = a.map_err(|err| err.to_string())?;
        if a.key.local_name().as_ref() == local {
            return a.unescape_value().map(|v| Some(v.into_owned())).map_err(|err| err.to_string());
        }
    }
    Ok(None)
}
