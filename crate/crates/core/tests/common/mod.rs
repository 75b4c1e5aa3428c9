#![allow(dead_code)]

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use ontomatch::encoder::{EncodedCorpus, EncodingView, StructuredConcept};
use ontomatch::exporter::{export_xml, AlignmentDocument};
use ontomatch::fuzzy::fuzzy_ratio;
use ontomatch::Correspondence;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pronounceable lowercase pseudo-word of `syllables` syllables.
pub fn word(rng: &mut impl Rng, syllables: usize) -> String {
    const C: &[u8] = b"bcdfghjklmnprstvz";
    const V: &[u8] = b"aeiou";
    (0..syllables)
        .map(|_| format!("{}{}", C[rng.gen_range(0..C.len())] as char, V[rng.gen_range(0..V.len())] as char))
        .collect()
}

pub fn vocabulary(rng: &mut impl Rng, n: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=4);
        let w = word(rng, syllables);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Space-separated texts of 1..=max_words words drawn from `vocab`.
pub fn texts(rng: &mut impl Rng, vocab: &[String], n: usize, max_words: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_words);
            (0..k).map(|_| vocab.choose(rng).unwrap().as_str()).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

pub fn corpus(prefix: &str, texts: &[String]) -> EncodedCorpus {
    EncodedCorpus {
        view: EncodingView::C,
        iris: (0..texts.len()).map(|i| format!("{prefix}{i:05}")).collect(),
        texts: texts.to_vec(),
        structured: texts
            .iter()
            .map(|t| StructuredConcept { concept_label: t.clone(), related_labels: vec![] })
            .collect(),
    }
}

pub struct Concept {
    pub iri: String,
    pub label: String,
    pub parent: Option<usize>,
}

fn escape_literal(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn write_turtle(path: &Path, concepts: &[Concept]) {
    let mut out = String::from(
        "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n\n",
    );
    for c in concepts {
        let _ = write!(out, "<{}> a owl:Class ;\n    rdfs:label \"{}\"", c.iri, escape_literal(&c.label));
        if let Some(p) = c.parent {
            let _ = write!(out, " ;\n    rdfs:subClassOf <{}>", concepts[p].iri);
        }
        out.push_str(" .\n\n");
    }
    std::fs::write(path, out).unwrap();
}

pub fn write_reference(path: &Path, pairs: &[(String, String)]) {
    let cells = pairs.iter().map(|(s, t)| Correspondence::new(s, t, 1.0, "reference")).collect();
    let doc = AlignmentDocument::new("source", "target", cells);
    std::fs::write(path, export_xml(&doc).unwrap()).unwrap();
}

fn concepts_from(prefix: &str, labels: &[String], rng: &mut impl Rng) -> Vec<Concept> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| Concept {
            iri: format!("{prefix}{i:05}"),
            label: l.clone(),
            // shallow random hierarchy; parents always come earlier
            parent: if i > 0 && rng.gen_bool(0.6) { Some(rng.gen_range(0..i)) } else { None },
        })
        .collect()
}

/// Source and target ontologies with `shared` identically labelled
/// concepts. Every other pair of labels has fuzzy ratio below `max_ratio`.
pub struct SyntheticTask {
    pub source: Vec<Concept>,
    pub target: Vec<Concept>,
    pub truth: Vec<(String, String)>,
}

pub fn synthetic_task(seed: u64, n_src: usize, n_tgt: usize, shared: usize, max_ratio: f64) -> SyntheticTask {
    let mut r = rng(seed);
    let vocab = vocabulary(&mut r, 400);
    let total = n_src + n_tgt - shared;
    let mut labels: Vec<String> = Vec::with_capacity(total);
    while labels.len() < total {
        let k = r.gen_range(1..=2);
        let cand = (0..k).map(|_| vocab.choose(&mut r).unwrap().as_str()).collect::<Vec<_>>().join(" ");
        if labels.iter().all(|l| fuzzy_ratio(l, &cand) < max_ratio) {
            labels.push(cand);
        }
    }
    let common = &labels[..shared];
    let src_only = &labels[shared..n_src];
    let tgt_only = &labels[n_src..];

    let mut src_labels: Vec<String> = common.iter().chain(src_only).cloned().collect();
    let mut tgt_labels: Vec<String> = common.iter().chain(tgt_only).cloned().collect();
    src_labels.shuffle(&mut r);
    tgt_labels.shuffle(&mut r);
    let source = concepts_from("http://example.org/src#S", &src_labels, &mut r);
    let target = concepts_from("http://example.org/tgt#T", &tgt_labels, &mut r);

    let truth = common
        .iter()
        .map(|l| {
            let s = source.iter().find(|c| &c.label == l).unwrap();
            let t = target.iter().find(|c| &c.label == l).unwrap();
            (s.iri.clone(), t.iri.clone())
        })
        .collect();
    SyntheticTask { source, target, truth }
}

/// A large source/target pair: targets are the source labels with one word
/// replaced in a third of the concepts.
pub fn large_task(seed: u64, n: usize) -> (Vec<Concept>, Vec<Concept>) {
    let mut r = rng(seed);
    let vocab = vocabulary(&mut r, 3000);
    let src_labels = texts(&mut r, &vocab, n, 3);
    let tgt_labels: Vec<String> = src_labels
        .iter()
        .map(|l| {
            if r.gen_bool(1.0 / 3.0) {
                let mut words: Vec<&str> = l.split(' ').collect();
                let i = r.gen_range(0..words.len());
                words[i] = vocab.choose(&mut r).unwrap();
                words.join(" ")
            } else {
                l.clone()
            }
        })
        .collect();
    let s = concepts_from("http://example.org/src#S", &src_labels, &mut r);
    let t = concepts_from("http://example.org/tgt#T", &tgt_labels, &mut r);
    (s, t)
}

/// One HTTP request seen by [`StubServer`].
#[derive(Debug, Clone)]
pub struct Seen {
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: serde_json::Value,
}

/// Minimal HTTP/1.1 server answering each POST through `handler`, which
/// returns a status code and JSON body.
pub struct StubServer {
    pub url: String,
    pub seen: Arc<Mutex<Vec<Seen>>>,
    pub hits: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&Seen, usize) -> (u16, String) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let hits = Arc::new(AtomicUsize::new(0));
        let handler = Arc::new(handler);
        let (seen2, hits2) = (seen.clone(), hits.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let (seen, hits, handler) = (seen2.clone(), hits2.clone(), handler.clone());
                thread::spawn(move || {
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut line = String::new();
                    if reader.read_line(&mut line).is_err() {
                        return;
                    }
                    let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
                    let mut headers = Vec::new();
                    let mut len = 0usize;
                    loop {
                        let mut h = String::new();
                        if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
                            break;
                        }
                        if let Some((k, v)) = h.trim_end().split_once(':') {
                            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
                            if k == "content-length" {
                                len = v.parse().unwrap_or(0);
                            }
                            headers.push((k, v));
                        }
                    }
                    let mut body = vec![0u8; len];
                    let _ = reader.read_exact(&mut body);
                    let req =
                        Seen { path, headers, body: serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null) };
                    let n = hits.fetch_add(1, Ordering::SeqCst);
                    seen.lock().unwrap().push(req.clone());
                    let (code, reply) = handler(&req, n);
                    let resp = format!(
                        "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                        reply.len()
                    );
                    let _ = stream.write_all(resp.as_bytes());
                });
            }
        });
        Self { url, seen, hits }
    }
}
