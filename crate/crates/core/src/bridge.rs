//! The search/ranking bridge: the adapter contract every engine implements,
//! a name-keyed registry, and the search-then-rank pipeline.
//!
//! Searching produces a hitset. Ranking only ever sees the hitset after it
//! has been capped to the `hitset_cap` largest (most recently added) record
//! ids, and its raw scores are turned into percentages of the best score.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{analyze_terms, FieldName, Record};
use crate::index::IndexError;
use crate::intbitset::{BitsetError, IntBitset, RecordId};

pub const DEFAULT_HITSET_CAP: usize = 10_000;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("adapter {0:?} is already registered")]
    DuplicateAdapterName(String),
    #[error("unknown adapter {0:?}")]
    UnknownAdapter(String),
    #[error("query has no searchable terms")]
    EmptyQuery,
    #[error("invalid field weights: {0}")]
    InvalidWeights(String),
    #[error("all scores are zero")]
    AllZeroScores,
    #[error("unknown record {0}")]
    UnknownRecord(RecordId),
    #[error("duplicate record id {0}")]
    DuplicateRecord(RecordId),
    #[error("adapter does not support {0}")]
    CapabilityUnsupported(&'static str),
    #[error("adapter is not committed")]
    NotCommitted,
    #[error("adapter is already committed")]
    AlreadyCommitted,
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Bitset(#[from] BitsetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Word,
    Phrase,
}

impl std::str::FromStr for QueryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word" => Ok(QueryKind::Word),
            "phrase" => Ok(QueryKind::Phrase),
            other => Err(format!("unknown query kind {other:?}, expected word or phrase")),
        }
    }
}

/// A query against one field. Terms are already analyzer-normalized.
///
/// A word query with several terms matches documents containing all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub field: FieldName,
    pub kind: QueryKind,
    pub terms: Vec<String>,
}

impl Query {
    /// Analyzes raw query text with the shared analyzer.
    pub fn parse(field: FieldName, kind: QueryKind, text: &str) -> Result<Query, BridgeError> {
        Query::from_terms(field, kind, analyze_terms(text))
    }

    pub fn from_terms(field: FieldName, kind: QueryKind, terms: Vec<String>) -> Result<Query, BridgeError> {
        if terms.is_empty() {
            return Err(BridgeError::EmptyQuery);
        }
        Ok(Query { field, kind, terms })
    }

    pub fn word(field: FieldName, text: &str) -> Result<Query, BridgeError> {
        Query::parse(field, QueryKind::Word, text)
    }

    pub fn phrase(field: FieldName, text: &str) -> Result<Query, BridgeError> {
        Query::parse(field, QueryKind::Phrase, text)
    }
}

/// Administrator-set per-field multipliers. Absent fields weigh 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldWeights(BTreeMap<FieldName, f64>);

impl FieldWeights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(field: FieldName, weight: f64) -> Self {
        Self::new().with(field, weight)
    }

    pub fn with(mut self, field: FieldName, weight: f64) -> Self {
        self.0.insert(field, weight);
        self
    }

    pub fn set(&mut self, field: FieldName, weight: f64) {
        self.0.insert(field, weight);
    }

    pub fn get(&self, field: FieldName) -> f64 {
        self.0.get(&field).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), BridgeError> {
        for (field, w) in &self.0 {
            if !w.is_finite() || *w < 0.0 {
                return Err(BridgeError::InvalidWeights(format!("{field} = {w}")));
            }
        }
        Ok(())
    }

    /// Positive weights in the fixed field order.
    pub fn active(&self) -> impl Iterator<Item = (FieldName, f64)> + '_ {
        FieldName::ALL
            .into_iter()
            .map(|f| (f, self.get(f)))
            .filter(|(_, w)| *w > 0.0)
    }

    pub fn is_all_zero(&self) -> bool {
        self.active().next().is_none()
    }

    /// Parses `field=weight` pairs separated by commas, e.g. `title=2,fulltext=1`.
    pub fn parse_list(spec: &str) -> Result<FieldWeights, BridgeError> {
        let mut weights = FieldWeights::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| BridgeError::InvalidWeights(format!("expected field=weight, got {part:?}")))?;
            let field: FieldName = name
                .trim()
                .parse()
                .map_err(|e: crate::corpus::UnknownField| BridgeError::InvalidWeights(e.to_string()))?;
            let w: f64 = value
                .trim()
                .parse()
                .map_err(|_| BridgeError::InvalidWeights(format!("bad number {value:?}")))?;
            weights.set(field, w);
        }
        weights.validate()?;
        Ok(weights)
    }

    /// Rescales so the largest weight is 1 and snaps each ratio to 24
    /// significant bits. Rankings depend only on weight ratios; snapping
    /// removes the last-ulp noise left by rescaling so that `c * w` and `w`
    /// produce bit-identical scores.
    pub fn normalized(&self) -> FieldWeights {
        let max = self.active().map(|(_, w)| w).fold(0.0, f64::max);
        if max == 0.0 {
            return FieldWeights::new();
        }
        FieldWeights(self.active().map(|(f, w)| (f, snap_significand(w / max))).collect())
    }
}

fn snap_significand(x: f64) -> f64 {
    const DROP: u32 = 28;
    let bits = x.to_bits();
    let rounded = (bits + (1 << (DROP - 1))) & !((1u64 << DROP) - 1);
    f64::from_bits(rounded)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankConfig {
    pub hitset_cap: usize,
    pub top_k: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            hitset_cap: DEFAULT_HITSET_CAP,
            top_k: DEFAULT_TOP_K,
        }
    }
}

impl RankConfig {
    pub fn with_top_k(top_k: usize) -> Self {
        RankConfig {
            top_k,
            ..Default::default()
        }
    }
}

/// Record-similarity parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MltParams {
    pub source_fields: Vec<FieldName>,
    /// Only the first this-many tokens of each source field are read.
    pub max_tokens_per_field: usize,
    pub max_query_terms: usize,
    pub min_term_freq: usize,
    pub min_doc_freq: usize,
    pub top_k: usize,
}

impl Default for MltParams {
    fn default() -> Self {
        MltParams {
            source_fields: FieldName::MLT_DEFAULT.to_vec(),
            max_tokens_per_field: 1000,
            max_query_terms: 25,
            min_term_freq: 2,
            min_doc_freq: 2,
            top_k: DEFAULT_TOP_K,
        }
    }
}

/// A record id with its raw (unnormalized) score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub id: RecordId,
    pub score: f64,
}

/// The bridge's total order: higher score first, then larger id first.
pub fn rank_order(a: &Scored, b: &Scored) -> Ordering {
    b.score.total_cmp(&a.score).then(b.id.cmp(&a.id))
}

/// Sorts by [`rank_order`] and keeps the first `k`.
pub fn top_k(mut scored: Vec<Scored>, k: usize) -> Vec<Scored> {
    if k == 0 {
        return Vec::new();
    }
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(rank_order);
    scored
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub id: RecordId,
    pub percent: f64,
}

/// Ranking output: percent scores, best first, the first entry at exactly 100.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedList {
    entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<RecordId> {
        self.entries.iter().map(|e| e.id).collect()
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn into_entries(self) -> Vec<RankedEntry> {
        self.entries
    }
}

/// Rounds to two decimals for presentation.
pub fn round_percent(p: f64) -> f64 {
    (p * 100.0).round() / 100.0
}

/// Keeps the `cap` largest ids when the hitset is larger than `cap`.
pub fn cap_hitset(hitset: &IntBitset, cap: usize) -> IntBitset {
    if hitset.len() <= cap {
        hitset.clone()
    } else {
        hitset.largest(cap)
    }
}

/// Converts raw scores into percentages of the maximum. Zero scores are dropped.
pub fn normalize_percent(scored: Vec<Scored>) -> Result<RankedList, BridgeError> {
    if scored.is_empty() {
        return Ok(RankedList::default());
    }
    let mut kept: Vec<Scored> = scored.into_iter().filter(|s| s.score > 0.0).collect();
    if kept.is_empty() {
        return Err(BridgeError::AllZeroScores);
    }
    kept.sort_unstable_by(rank_order);
    let max = kept[0].score;
    let entries = kept
        .into_iter()
        .map(|s| RankedEntry {
            id: s.id,
            percent: 100.0 * (s.score / max),
        })
        .collect();
    Ok(RankedList { entries })
}

/// The capability contract an engine implements to plug into the bridge.
pub trait SearchRankAdapter: Send + Sync {
    fn index_records(&mut self, records: &[Record]) -> Result<(), BridgeError>;

    fn commit(&mut self) -> Result<(), BridgeError>;

    fn is_committed(&self) -> bool;

    fn contains_record(&self, id: RecordId) -> bool;

    fn search(&self, query: &Query) -> Result<IntBitset, BridgeError>;

    /// Raw weighted scores for members of `hitset`, best `top_k` under
    /// [`rank_order`]. Ids unknown to the engine and zero scores are skipped.
    fn rank(
        &self,
        query: &Query,
        hitset: &IntBitset,
        weights: &FieldWeights,
        top_k: usize,
    ) -> Result<Vec<Scored>, BridgeError>;

    fn similar(&self, id: RecordId, params: &MltParams) -> Result<Vec<Scored>, BridgeError> {
        let _ = (id, params);
        Err(BridgeError::CapabilityUnsupported("record similarity"))
    }
}

/// Name-keyed set of adapters, built once at startup.
#[derive(Default)]
pub struct AdapterRegistry {
    adapters: BTreeMap<String, Box<dyn SearchRankAdapter>>,
}

impl AdapterRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        adapter: Box<dyn SearchRankAdapter>,
    ) -> Result<(), BridgeError> {
        let name = name.into();
        if self.adapters.contains_key(&name) {
            return Err(BridgeError::DuplicateAdapterName(name));
        }
        self.adapters.insert(name, adapter);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&dyn SearchRankAdapter, BridgeError> {
        self.adapters
            .get(name)
            .map(|a| a.as_ref())
            .ok_or_else(|| BridgeError::UnknownAdapter(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut (dyn SearchRankAdapter + 'static), BridgeError> {
        self.adapters
            .get_mut(name)
            .map(|a| a.as_mut())
            .ok_or_else(|| BridgeError::UnknownAdapter(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.adapters.keys().map(String::as_str).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &dyn SearchRankAdapter)> {
        self.adapters.iter().map(|(n, a)| (n.as_str(), a.as_ref()))
    }

    pub fn is_committed(&self) -> bool {
        !self.adapters.is_empty() && self.adapters.values().all(|a| a.is_committed())
    }

    /// Indexes `records` into every adapter. The batch is validated up front
    /// so a rejected batch leaves every adapter untouched.
    pub fn ingest(&mut self, records: &[Record]) -> Result<usize, BridgeError> {
        if self.adapters.values().any(|a| a.is_committed()) {
            return Err(BridgeError::AlreadyCommitted);
        }
        let mut batch = HashSet::with_capacity(records.len());
        for r in records {
            if !batch.insert(r.id) || self.adapters.values().any(|a| a.contains_record(r.id)) {
                return Err(BridgeError::DuplicateRecord(r.id));
            }
        }
        for adapter in self.adapters.values_mut() {
            adapter.index_records(records)?;
        }
        Ok(records.len())
    }

    pub fn commit_all(&mut self) -> Result<(), BridgeError> {
        for adapter in self.adapters.values_mut() {
            adapter.commit()?;
        }
        Ok(())
    }
}

/// Result of [`search_then_rank`]: the full uncapped hitset and the ranking.
#[derive(Debug, Clone)]
pub struct SearchRankOutcome {
    pub hitset: IntBitset,
    pub ranked: RankedList,
}

/// Ranks a caller-supplied hitset: cap, score, normalize, truncate.
pub fn rank_hitset(
    adapter: &dyn SearchRankAdapter,
    query: &Query,
    hitset: &IntBitset,
    weights: &FieldWeights,
    config: &RankConfig,
) -> Result<RankedList, BridgeError> {
    weights.validate()?;
    let weights = weights.normalized();
    if hitset.is_empty() || weights.is_all_zero() || config.top_k == 0 {
        return Ok(RankedList::default());
    }
    let capped = cap_hitset(hitset, config.hitset_cap);
    let scored = adapter.rank(query, &capped, &weights, config.top_k)?;
    let mut ranked = match normalize_percent(scored) {
        Ok(r) => r,
        Err(BridgeError::AllZeroScores) => RankedList::default(),
        Err(e) => return Err(e),
    };
    ranked.truncate(config.top_k);
    Ok(ranked)
}

pub fn search_then_rank(
    adapter: &dyn SearchRankAdapter,
    query: &Query,
    weights: &FieldWeights,
    config: &RankConfig,
) -> Result<SearchRankOutcome, BridgeError> {
    if query.terms.is_empty() {
        return Err(BridgeError::EmptyQuery);
    }
    weights.validate()?;
    let hitset = adapter.search(query)?;
    let ranked = rank_hitset(adapter, query, &hitset, weights, config)?;
    Ok(SearchRankOutcome { hitset, ranked })
}

pub fn find_similar(
    adapter: &dyn SearchRankAdapter,
    id: RecordId,
    params: &MltParams,
) -> Result<RankedList, BridgeError> {
    let scored = adapter.similar(id, params)?;
    let mut ranked = match normalize_percent(scored) {
        Ok(r) => r,
        Err(BridgeError::AllZeroScores) => RankedList::default(),
        Err(e) => return Err(e),
    };
    ranked.truncate(params.top_k);
    Ok(ranked)
}
