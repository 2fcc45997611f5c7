//! Brute-force reference implementations used by the integration and
//! acceptance tests. Nothing here touches the index, bitset or scoring code
//! under test: records are re-tokenized and every statistic is recomputed by
//! scanning.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use searchbridge::{FieldName, Record};

/// Lowercase alphanumeric runs. Test corpora are ASCII, so this agrees with
/// the production analyzer on them.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_ascii_lowercase())
        .collect()
}

pub fn field_tokens(record: &Record, field: FieldName) -> Vec<String> {
    match field {
        FieldName::Title => tokens(&record.title),
        FieldName::Abstract => tokens(&record.abstract_text),
        FieldName::Author => record.authors.iter().flat_map(|a| tokens(a)).collect(),
        FieldName::Keyword => record.keywords.iter().flat_map(|k| tokens(k)).collect(),
        FieldName::Fulltext => tokens(&record.fulltext),
    }
}

pub fn word_scan(records: &[Record], field: FieldName, terms: &[String]) -> Vec<u32> {
    let mut out: Vec<u32> = records
        .iter()
        .filter(|r| {
            let toks = field_tokens(r, field);
            terms.iter().all(|t| toks.contains(t))
        })
        .map(|r| r.id)
        .collect();
    out.sort_unstable();
    out
}

pub fn phrase_scan(records: &[Record], field: FieldName, terms: &[String]) -> Vec<u32> {
    let mut out: Vec<u32> = records
        .iter()
        .filter(|r| {
            let toks = field_tokens(r, field);
            toks.len() >= terms.len() && toks.windows(terms.len()).any(|w| w == terms)
        })
        .map(|r| r.id)
        .collect();
    out.sort_unstable();
    out
}

/// BM25 with k1 = 1.2, b = 0.75 and idf = ln(1 + (N - df + 0.5)/(df + 0.5)),
/// every statistic recomputed from scratch.
pub fn naive_bm25(records: &[Record], field: FieldName, terms: &[String], doc: u32) -> f64 {
    let (k1, b) = (1.2f64, 0.75f64);
    let docs: Vec<(u32, Vec<String>)> = records.iter().map(|r| (r.id, field_tokens(r, field))).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / n;
    let (_, doc_tokens) = docs.iter().find(|(id, _)| *id == doc).expect("doc in corpus");
    let len = doc_tokens.len() as f64;
    let distinct: BTreeSet<&String> = terms.iter().collect();
    let mut score = 0.0;
    for term in distinct {
        let tf = doc_tokens.iter().filter(|t| *t == term).count() as f64;
        if tf == 0.0 {
            continue;
        }
        let df = docs.iter().filter(|(_, t)| t.contains(term)).count() as f64;
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
    }
    score
}

pub fn naive_weighted(
    records: &[Record],
    weights: &[(FieldName, f64)],
    terms: &[String],
    doc: u32,
) -> f64 {
    weights
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(f, w)| w * naive_bm25(records, *f, terms, doc))
        .sum()
}

pub fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Small-vocabulary random corpus so that words and phrases actually match.
pub struct RandomCorpus {
    pub records: Vec<Record>,
    pub vocab: Vec<String>,
}

pub fn random_corpus(seed: u64, max_docs: usize) -> RandomCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab_size = rng.random_range(6..=16);
    let vocab: Vec<String> = (0..vocab_size).map(|i| format!("w{i}")).collect();
    let n_docs = rng.random_range(1..=max_docs);
    let mut next_id = 0u32;
    let words = |rng: &mut ChaCha8Rng, max: usize| -> String {
        let n = rng.random_range(0..=max);
        (0..n)
            .map(|_| {
                let w = &vocab[rng.random_range(0..vocab.len())];
                if rng.random_bool(0.1) {
                    w.to_uppercase()
                } else {
                    w.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(if rng.random_bool(0.5) { " " } else { ", " })
    };
    let mut records = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        next_id += rng.random_range(1..=3);
        let authors = (0..rng.random_range(0..3)).map(|_| words(&mut rng, 2)).collect();
        let keywords = (0..rng.random_range(0..4)).map(|_| words(&mut rng, 2)).collect();
        records.push(Record {
            id: next_id,
            title: words(&mut rng, 6),
            abstract_text: words(&mut rng, 20),
            authors,
            keywords,
            fulltext: words(&mut rng, 60),
        });
    }
    RandomCorpus { records, vocab }
}

pub fn random_terms(rng: &mut ChaCha8Rng, vocab: &[String], len: usize) -> Vec<String> {
    (0..len).map(|_| vocab[rng.random_range(0..vocab.len())].clone()).collect()
}

/// Per-term postings recomputed by scanning: term -> [(doc, positions)].
pub fn scan_postings(records: &[Record], field: FieldName) -> HashMap<String, Vec<(u32, Vec<u32>)>> {
    let mut sorted: Vec<&Record> = records.iter().collect();
    sorted.sort_by_key(|r| r.id);
    let mut out: HashMap<String, Vec<(u32, Vec<u32>)>> = HashMap::new();
    for r in sorted {
        let mut per_doc: HashMap<String, Vec<u32>> = HashMap::new();
        for (pos, t) in field_tokens(r, field).into_iter().enumerate() {
            per_doc.entry(t).or_default().push(pos as u32);
        }
        for (t, positions) in per_doc {
            out.entry(t).or_default().push((r.id, positions));
        }
    }
    out
}
