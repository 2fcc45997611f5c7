//! Positional inverted index for a single field, with BM25 scoring.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::corpus::{FieldName, Token};
use crate::intbitset::{IntBitset, RecordId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("{field}: document {doc} is already indexed")]
    DuplicateDocument { field: FieldName, doc: RecordId },
    #[error("{field}: index is committed and can no longer change")]
    IndexCommitted { field: FieldName },
    #[error("{field}: index is not committed yet")]
    IndexNotCommitted { field: FieldName },
    #[error("phrase query has no terms")]
    EmptyPhrase,
    #[error("{field}: unknown document {doc}")]
    UnknownDocument { field: FieldName, doc: RecordId },
    #[error("document id {0} is outside the supported range")]
    IdOutOfRange(RecordId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    /// Always-positive idf: `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn idf(doc_count: usize, doc_freq: usize) -> f64 {
        let n = doc_count as f64;
        let df = doc_freq as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Saturated term-frequency component for one term in one document.
    pub fn tf_weight(&self, tf: u32, len: u32, avg_len: f64) -> f64 {
        let tf = tf as f64;
        let norm = if avg_len > 0.0 { len as f64 / avg_len } else { 0.0 };
        tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * norm))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Posting {
    pub doc: RecordId,
    /// Ascending positions; term frequency is their count.
    pub positions: Vec<u32>,
}

impl Posting {
    pub fn term_freq(&self) -> u32 {
        self.positions.len() as u32
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostingList {
    entries: Vec<Posting>,
}

impl PostingList {
    pub fn entries(&self) -> &[Posting] {
        &self.entries
    }

    pub fn doc_freq(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, doc: RecordId) -> Option<&Posting> {
        self.entries
            .binary_search_by_key(&doc, |p| p.doc)
            .ok()
            .map(|i| &self.entries[i])
    }

    fn insert(&mut self, posting: Posting) {
        match self.entries.last() {
            Some(last) if last.doc > posting.doc => {
                let at = self.entries.partition_point(|p| p.doc < posting.doc);
                self.entries.insert(at, posting);
            }
            _ => self.entries.push(posting),
        }
    }

    fn doc_ids(&self) -> Vec<RecordId> {
        self.entries.iter().map(|p| p.doc).collect()
    }
}

/// Inverted index for one field. Single writer until [`FieldIndex::commit`],
/// read-only afterwards.
#[derive(Debug, Clone)]
pub struct FieldIndex {
    field: FieldName,
    postings: HashMap<String, PostingList>,
    field_lengths: BTreeMap<RecordId, u32>,
    total_length: u64,
    committed: bool,
}

impl FieldIndex {
    pub fn new(field: FieldName) -> Self {
        FieldIndex {
            field,
            postings: HashMap::new(),
            field_lengths: BTreeMap::new(),
            total_length: 0,
            committed: false,
        }
    }

    pub fn field(&self) -> FieldName {
        self.field
    }

    pub fn is_committed(&self) -> bool {
        self.committed
    }

    pub fn doc_count(&self) -> usize {
        self.field_lengths.len()
    }

    pub fn avg_field_length(&self) -> f64 {
        if self.field_lengths.is_empty() {
            0.0
        } else {
            self.total_length as f64 / self.field_lengths.len() as f64
        }
    }

    pub fn field_length(&self, doc: RecordId) -> Option<u32> {
        self.field_lengths.get(&doc).copied()
    }

    pub fn contains_doc(&self, doc: RecordId) -> bool {
        self.field_lengths.contains_key(&doc)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.field_lengths.keys().copied()
    }

    pub fn postings(&self, term: &str) -> Option<&PostingList> {
        self.postings.get(term)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, PostingList::doc_freq)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &PostingList)> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p))
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn add_document(&mut self, doc: RecordId, tokens: &[Token]) -> Result<(), IndexError> {
        if self.committed {
            return Err(IndexError::IndexCommitted { field: self.field });
        }
        if doc > crate::intbitset::DEFAULT_MAX_ID {
            return Err(IndexError::IdOutOfRange(doc));
        }
        if self.field_lengths.contains_key(&doc) {
            return Err(IndexError::DuplicateDocument {
                field: self.field,
                doc,
            });
        }
        let mut by_term: HashMap<&str, Vec<u32>> = HashMap::new();
        for token in tokens {
            by_term.entry(&token.term).or_default().push(token.position);
        }
        for (term, mut positions) in by_term {
            positions.sort_unstable();
            self.postings
                .entry(term.to_string())
                .or_default()
                .insert(Posting { doc, positions });
        }
        self.field_lengths.insert(doc, tokens.len() as u32);
        self.total_length += tokens.len() as u64;
        Ok(())
    }

    /// Freezes the index. Idempotent.
    pub fn commit(&mut self) {
        if !self.committed {
            self.postings.shrink_to_fit();
            self.committed = true;
        }
    }

    fn ensure_committed(&self) -> Result<(), IndexError> {
        if self.committed {
            Ok(())
        } else {
            Err(IndexError::IndexNotCommitted { field: self.field })
        }
    }

    pub fn search_word(&self, term: &str) -> Result<IntBitset, IndexError> {
        self.ensure_committed()?;
        Ok(match self.postings.get(term) {
            Some(list) => IntBitset::from_sorted_ids(&list.doc_ids()).expect("ids validated on insert"),
            None => IntBitset::new(),
        })
    }

    /// Documents containing `terms` at consecutive positions, in order.
    pub fn search_phrase<S: AsRef<str>>(&self, terms: &[S]) -> Result<IntBitset, IndexError> {
        self.ensure_committed()?;
        match terms {
            [] => Err(IndexError::EmptyPhrase),
            [single] => self.search_word(single.as_ref()),
            _ => {
                let mut lists = Vec::with_capacity(terms.len());
                for term in terms {
                    match self.postings.get(term.as_ref()) {
                        Some(list) => lists.push(list),
                        None => return Ok(IntBitset::new()),
                    }
                }
                // Drive the intersection from the rarest term.
                let (driver_offset, driver) = lists
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, l)| l.doc_freq())
                    .map(|(i, l)| (i, *l))
                    .expect("at least two terms");
                let mut matches = Vec::new();
                'docs: for posting in driver.entries() {
                    let mut per_term = Vec::with_capacity(lists.len());
                    for list in &lists {
                        match list.get(posting.doc) {
                            Some(p) => per_term.push(&p.positions[..]),
                            None => continue 'docs,
                        }
                    }
                    if phrase_matches(&per_term, driver_offset) {
                        matches.push(posting.doc);
                    }
                }
                Ok(IntBitset::from_sorted_ids(&matches).expect("ids validated on insert"))
            }
        }
    }

    /// Distinct terms in first-occurrence order; scoring sums in this order.
    fn distinct_terms<S: AsRef<str>>(terms: &[S]) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::with_capacity(terms.len());
        for t in terms {
            if !out.contains(&t.as_ref()) {
                out.push(t.as_ref());
            }
        }
        out
    }

    pub fn bm25_score<S: AsRef<str>>(
        &self,
        terms: &[S],
        doc: RecordId,
        params: &Bm25Params,
    ) -> Result<f64, IndexError> {
        self.ensure_committed()?;
        let len = self.field_length(doc).ok_or(IndexError::UnknownDocument {
            field: self.field,
            doc,
        })?;
        let n = self.doc_count();
        let avg = self.avg_field_length();
        let mut score = 0.0;
        for term in Self::distinct_terms(terms) {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            if let Some(p) = list.get(doc) {
                score += Bm25Params::idf(n, list.doc_freq()) * params.tf_weight(p.term_freq(), len, avg);
            }
        }
        Ok(score)
    }

    /// BM25 scores for every member of `hits` that contains at least one
    /// query term. Ids unknown to this index are ignored. Each score is
    /// bit-identical to [`FieldIndex::bm25_score`] for the same document.
    pub fn score_hits<S: AsRef<str>>(
        &self,
        terms: &[S],
        hits: &IntBitset,
        params: &Bm25Params,
    ) -> Result<HashMap<RecordId, f64>, IndexError> {
        self.ensure_committed()?;
        let n = self.doc_count();
        let avg = self.avg_field_length();
        let mut scores: HashMap<RecordId, f64> = HashMap::new();
        for term in Self::distinct_terms(terms) {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = Bm25Params::idf(n, list.doc_freq());
            let mut visit = |p: &Posting| {
                let len = self.field_lengths[&p.doc];
                *scores.entry(p.doc).or_insert(0.0) += idf * params.tf_weight(p.term_freq(), len, avg);
            };
            if hits.len() < list.doc_freq() {
                for doc in hits {
                    if let Some(p) = list.get(doc) {
                        visit(p);
                    }
                }
            } else {
                for p in list.entries() {
                    if hits.contains(p.doc) {
                        visit(p);
                    }
                }
            }
        }
        Ok(scores)
    }
}

/// True when some start position `s` exists such that term `i` occurs at
/// `s + i` for every `i`. `driver` indexes the shortest positions list.
fn phrase_matches(positions: &[&[u32]], driver: usize) -> bool {
    positions[driver].iter().any(|&p| {
        let Some(start) = p.checked_sub(driver as u32) else {
            return false;
        };
        positions
            .iter()
            .enumerate()
            .all(|(i, list)| list.binary_search(&(start + i as u32)).is_ok())
    })
}
