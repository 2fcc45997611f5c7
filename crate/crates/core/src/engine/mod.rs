//! Reference engine adapters.
//!
//! [`UnifiedEngine`] keeps every field behind one logical index and supports
//! record similarity. [`PerFieldEngine`] keeps one self-contained database per
//! field and aggregates ranking results across them.

use std::collections::HashMap;

use crate::bridge::{BridgeError, Query, QueryKind, Scored};
use crate::corpus::Record;
use crate::index::FieldIndex;
use crate::intbitset::{IntBitset, RecordId};

mod perfield;
mod unified;

pub use perfield::PerFieldEngine;
pub use unified::UnifiedEngine;

/// Runs a word or phrase query against one field index. Multi-term word
/// queries require every term.
pub(crate) fn search_index(index: &FieldIndex, query: &Query) -> Result<IntBitset, BridgeError> {
    match query.kind {
        QueryKind::Phrase => Ok(index.search_phrase(&query.terms)?),
        QueryKind::Word => {
            let mut terms = query.terms.iter();
            let first = terms.next().ok_or(BridgeError::EmptyQuery)?;
            let mut hits = index.search_word(first)?;
            for term in terms {
                if hits.is_empty() {
                    break;
                }
                hits = hits.intersection(&index.search_word(term)?);
            }
            Ok(hits)
        }
    }
}

/// Sums `weight * score` per document, visiting fields in the given order so
/// that every engine produces bit-identical totals.
pub(crate) fn weighted_sum(per_field: Vec<(f64, HashMap<RecordId, f64>)>) -> Vec<Scored> {
    let mut total: HashMap<RecordId, f64> = HashMap::new();
    for (weight, scores) in per_field {
        for (doc, s) in scores {
            *total.entry(doc).or_insert(0.0) += weight * s;
        }
    }
    total
        .into_iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|(id, score)| Scored { id, score })
        .collect()
}

/// Validates a batch against ids already present and against itself.
pub(crate) fn check_batch(
    records: &[Record],
    present: impl Fn(RecordId) -> bool,
) -> Result<(), BridgeError> {
    let mut seen = std::collections::HashSet::with_capacity(records.len());
    for r in records {
        if r.id == 0 || r.id > crate::intbitset::DEFAULT_MAX_ID {
            return Err(BridgeError::Index(crate::index::IndexError::IdOutOfRange(r.id)));
        }
        if !seen.insert(r.id) || present(r.id) {
            return Err(BridgeError::DuplicateRecord(r.id));
        }
    }
    Ok(())
}
