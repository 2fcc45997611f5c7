use rayon::prelude::*;

use crate::bridge::{top_k, BridgeError, FieldWeights, Query, Scored, SearchRankAdapter};
use crate::corpus::{FieldName, Record};
use crate::index::{Bm25Params, FieldIndex};
use crate::intbitset::{IntBitset, RecordId};

use super::{check_batch, search_index, weighted_sum};

/// One independent database per field. Each database carries its own
/// statistics and commit state; ranking queries each relevant database and
/// sums the weighted results. Record similarity is not offered.
#[derive(Debug, Clone)]
pub struct PerFieldEngine {
    databases: Vec<FieldIndex>,
    params: Bm25Params,
}

impl Default for PerFieldEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl PerFieldEngine {
    pub fn new() -> Self {
        Self::with_params(Bm25Params::default())
    }

    pub fn with_params(params: Bm25Params) -> Self {
        PerFieldEngine {
            databases: FieldName::ALL.into_iter().map(FieldIndex::new).collect(),
            params,
        }
    }

    pub fn database(&self, field: FieldName) -> &FieldIndex {
        &self.databases[field.index()]
    }

    pub fn database_mut(&mut self, field: FieldName) -> &mut FieldIndex {
        &mut self.databases[field.index()]
    }
}

impl SearchRankAdapter for PerFieldEngine {
    fn index_records(&mut self, records: &[Record]) -> Result<(), BridgeError> {
        check_batch(records, |id| self.contains_record(id))?;
        // Every database gets the whole batch before any other is touched.
        for (field, db) in FieldName::ALL.into_iter().zip(&mut self.databases) {
            for record in records {
                db.add_document(record.id, &record.field_tokens(field))?;
            }
        }
        Ok(())
    }

    fn commit(&mut self) -> Result<(), BridgeError> {
        for db in &mut self.databases {
            db.commit();
        }
        Ok(())
    }

    fn is_committed(&self) -> bool {
        self.databases.iter().all(FieldIndex::is_committed)
    }

    fn contains_record(&self, id: RecordId) -> bool {
        self.databases.iter().any(|db| db.contains_doc(id))
    }

    fn search(&self, query: &Query) -> Result<IntBitset, BridgeError> {
        search_index(self.database(query.field), query)
    }

    fn rank(
        &self,
        query: &Query,
        hitset: &IntBitset,
        weights: &FieldWeights,
        k: usize,
    ) -> Result<Vec<Scored>, BridgeError> {
        weights.validate()?;
        let active: Vec<(FieldName, f64)> = weights.active().collect();
        // Per-database scoring is independent; the sum below runs in field order.
        let per_field = active
            .par_iter()
            .map(|&(field, weight)| {
                self.database(field)
                    .score_hits(&query.terms, hitset, &self.params)
                    .map(|scores| (weight, scores))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(top_k(weighted_sum(per_field), k))
    }
}
