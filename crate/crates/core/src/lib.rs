//! Search and word-similarity ranking bridge over pluggable full-text engines.
//!
//! Engines implement [`SearchRankAdapter`]. The bridge searches, caps the
//! resulting hitset to the most recently added records, ranks it with
//! field-weighted BM25 and reports percentages of the best score. Hitsets
//! travel between components as [`IntBitset`]s in the compact `IBS1` format.

pub mod benchmark;
pub mod bridge;
pub mod corpus;
pub mod engine;
pub mod generate;
pub mod index;
pub mod intbitset;
pub mod service;

pub use bridge::{
    cap_hitset, find_similar, normalize_percent, rank_hitset, search_then_rank, AdapterRegistry, BridgeError,
    FieldWeights, MltParams, Query, QueryKind, RankConfig, RankedEntry, RankedList, Scored, SearchRankAdapter,
};
pub use corpus::{analyze, parse_jsonl, write_jsonl, CorpusError, FieldName, Record, Token};
pub use engine::{PerFieldEngine, UnifiedEngine};
pub use index::{Bm25Params, FieldIndex, IndexError};
pub use intbitset::{BitsetError, IntBitset, RecordId, SetOp};

/// Registry with both reference engines under their conventional names.
pub fn default_registry() -> AdapterRegistry {
    let mut registry = AdapterRegistry::new();
    registry
        .register("unified", Box::new(UnifiedEngine::new()))
        .expect("fresh registry");
    registry
        .register("perfield", Box::new(PerFieldEngine::new()))
        .expect("fresh registry");
    registry
}
