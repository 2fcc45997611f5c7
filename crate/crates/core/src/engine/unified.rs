use std::collections::{BTreeMap, HashMap};

use crate::bridge::{top_k, BridgeError, FieldWeights, MltParams, Query, Scored, SearchRankAdapter};
use crate::corpus::{FieldName, Record};
use crate::index::{Bm25Params, FieldIndex, IndexError};
use crate::intbitset::{IntBitset, RecordId};

use super::{check_batch, search_index, weighted_sum};

/// One logical index over all fields, committed as a unit, with a record store
/// for similarity queries.
#[derive(Debug, Clone)]
pub struct UnifiedEngine {
    fields: Vec<FieldIndex>,
    records: HashMap<RecordId, Record>,
    params: Bm25Params,
    committed: bool,
}

impl Default for UnifiedEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl UnifiedEngine {
    pub fn new() -> Self {
        Self::with_params(Bm25Params::default())
    }

    pub fn with_params(params: Bm25Params) -> Self {
        UnifiedEngine {
            fields: FieldName::ALL.into_iter().map(FieldIndex::new).collect(),
            records: HashMap::new(),
            params,
            committed: false,
        }
    }

    pub fn field_index(&self, field: FieldName) -> &FieldIndex {
        &self.fields[field.index()]
    }

    pub fn record(&self, id: RecordId) -> Option<&Record> {
        self.records.get(&id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Picks the most salient terms of a record for a similarity query.
    ///
    /// Reads at most `max_tokens_per_field` tokens of each source field,
    /// keeps terms with enough occurrences in the record and enough documents
    /// in some source field index, scores them by `tf * idf` (idf from the
    /// source field where the term is rarest) and returns the best
    /// `max_query_terms`, ties broken by term order.
    pub fn mlt_select_terms(&self, id: RecordId, params: &MltParams) -> Result<Vec<String>, BridgeError> {
        let record = self.records.get(&id).ok_or(BridgeError::UnknownRecord(id))?;
        let sources = source_fields(params);
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for &field in &sources {
            for token in record.field_tokens(field).into_iter().take(params.max_tokens_per_field) {
                *tf.entry(token.term).or_insert(0) += 1;
            }
        }
        let mut candidates: Vec<(String, f64)> = Vec::new();
        for (term, freq) in tf {
            if freq < params.min_term_freq {
                continue;
            }
            let dfs: Vec<(usize, usize)> = sources
                .iter()
                .map(|&f| {
                    let idx = self.field_index(f);
                    (idx.doc_freq(&term), idx.doc_count())
                })
                .collect();
            if !dfs.iter().any(|&(df, _)| df >= params.min_doc_freq) {
                continue;
            }
            let Some((df, n)) = dfs.into_iter().filter(|&(df, _)| df > 0).min_by_key(|&(df, _)| df) else {
                continue;
            };
            candidates.push((term, freq as f64 * Bm25Params::idf(n, df)));
        }
        // BTreeMap iteration gave lexicographic order; the stable sort keeps it for ties.
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
        candidates.truncate(params.max_query_terms);
        Ok(candidates.into_iter().map(|(t, _)| t).collect())
    }

    fn ensure_committed(&self, field: FieldName) -> Result<(), BridgeError> {
        if self.committed {
            Ok(())
        } else {
            Err(IndexError::IndexNotCommitted { field }.into())
        }
    }
}

fn source_fields(params: &MltParams) -> Vec<FieldName> {
    FieldName::ALL
        .into_iter()
        .filter(|f| params.source_fields.contains(f))
        .collect()
}

impl SearchRankAdapter for UnifiedEngine {
    fn index_records(&mut self, records: &[Record]) -> Result<(), BridgeError> {
        if self.committed {
            return Err(IndexError::IndexCommitted { field: FieldName::Title }.into());
        }
        check_batch(records, |id| self.records.contains_key(&id))?;
        for record in records {
            for (field, index) in FieldName::ALL.into_iter().zip(&mut self.fields) {
                index.add_document(record.id, &record.field_tokens(field))?;
            }
            self.records.insert(record.id, record.clone());
        }
        Ok(())
    }

    fn commit(&mut self) -> Result<(), BridgeError> {
        for index in &mut self.fields {
            index.commit();
        }
        self.committed = true;
        Ok(())
    }

    fn is_committed(&self) -> bool {
        self.committed
    }

    fn contains_record(&self, id: RecordId) -> bool {
        self.records.contains_key(&id)
    }

    fn search(&self, query: &Query) -> Result<IntBitset, BridgeError> {
        self.ensure_committed(query.field)?;
        search_index(self.field_index(query.field), query)
    }

    fn rank(
        &self,
        query: &Query,
        hitset: &IntBitset,
        weights: &FieldWeights,
        k: usize,
    ) -> Result<Vec<Scored>, BridgeError> {
        weights.validate()?;
        let mut per_field = Vec::new();
        for (field, weight) in weights.active() {
            self.ensure_committed(field)?;
            let scores = self.field_index(field).score_hits(&query.terms, hitset, &self.params)?;
            per_field.push((weight, scores));
        }
        Ok(top_k(weighted_sum(per_field), k))
    }

    fn similar(&self, id: RecordId, params: &MltParams) -> Result<Vec<Scored>, BridgeError> {
        self.ensure_committed(FieldName::Title)?;
        let terms = self.mlt_select_terms(id, params)?;
        if terms.is_empty() {
            return Ok(Vec::new());
        }
        let sources = source_fields(params);
        let mut candidates = IntBitset::new();
        for &field in &sources {
            let index = self.field_index(field);
            for term in &terms {
                candidates = candidates.union(&index.search_word(term)?);
            }
        }
        candidates.remove(id);
        let mut per_field = Vec::with_capacity(sources.len());
        for &field in &sources {
            per_field.push((1.0, self.field_index(field).score_hits(&terms, &candidates, &self.params)?));
        }
        Ok(top_k(weighted_sum(per_field), params.top_k))
    }
}
