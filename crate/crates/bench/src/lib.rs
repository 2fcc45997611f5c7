//! Fixtures shared by the benchmarks.

use searchbridge::generate::{generate, GenConfig};
use searchbridge::{IntBitset, PerFieldEngine, SearchRankAdapter, UnifiedEngine};

/// Both engines, indexed and committed over the same generated corpus.
pub fn engines(docs: usize) -> (UnifiedEngine, PerFieldEngine) {
    let records = generate(&GenConfig {
        n_docs: docs,
        ..GenConfig::default()
    });
    let mut unified = UnifiedEngine::new();
    let mut perfield = PerFieldEngine::new();
    unified.index_records(&records).expect("fresh engine");
    perfield.index_records(&records).expect("fresh engine");
    unified.commit().expect("commit");
    perfield.commit().expect("commit");
    (unified, perfield)
}

/// `n` ids spread evenly across most of the id range.
pub fn sparse_ids(n: u32) -> IntBitset {
    let stride = ((1u32 << 27) / n.max(1)).max(1);
    IntBitset::from_ids((1..=n).map(|i| i * stride - 1)).expect("ids under the limit")
}

/// Ids `1..=n`.
pub fn dense_ids(n: u32) -> IntBitset {
    IntBitset::from_ids(1..=n).expect("ids under the limit")
}
