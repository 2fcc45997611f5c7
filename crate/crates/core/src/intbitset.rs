//! Dense bitset over record identifiers, the hitset currency of the bridge.
//!
//! Bit `j` of word `w` represents identifier `64 * w + j`. The word vector is
//! always kept canonical: the trailing word is nonzero and the empty set has
//! no words at all.
//!
//! # Wire format (`IBS1`)
//!
//! ```text
//! offset  size  field
//! 0       4     magic "IBS1" (49 42 53 31)
//! 4       1     version = 1
//! 5       1     flags (bit0: payload is a raw DEFLATE stream, other bits 0)
//! 6       2     reserved, zero
//! 8       8     word_count, u64 little-endian
//! 16      ..    payload: word_count u64 little-endian words, raw or deflated
//! ```
//!
//! Payloads of at least [`COMPRESSION_THRESHOLD`] raw bytes are deflated.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::ops::{BitAnd, BitOr, BitXor, Sub};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use thiserror::Error;

/// Record identifier type shared across the crate.
pub type RecordId = u32;

/// Default bound on the largest admissible identifier (2^27).
pub const DEFAULT_MAX_ID: RecordId = 1 << 27;

pub const MAGIC: [u8; 4] = *b"IBS1";
pub const FORMAT_VERSION: u8 = 1;
pub const FLAG_DEFLATE: u8 = 0x01;
pub const HEADER_LEN: usize = 16;
/// Raw payloads at or above this many bytes are deflated on serialization.
pub const COMPRESSION_THRESHOLD: usize = 8192;
/// Media type used when a serialized bitset travels over HTTP.
pub const MEDIA_TYPE: &str = "application/x-intbitset";

const WORD_BITS: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitsetError {
    #[error("identifier {id} exceeds the configured limit {limit}")]
    IdOutOfRange { id: u64, limit: RecordId },
    #[error("bad magic, expected \"IBS1\"")]
    BadMagic,
    #[error("unsupported format version {version} (flags {flags:#04x})")]
    UnsupportedVersion { version: u8, flags: u8 },
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("payload size mismatch: header announces {expected} bytes, payload holds {found}")]
    PayloadSizeMismatch { expected: u64, found: u64 },
    #[error("corrupt compressed payload: {0}")]
    CorruptPayload(String),
    #[error("payload implies identifiers up to {implied}, above the limit {limit}")]
    LimitExceeded { implied: u64, limit: RecordId },
}

/// Which binary set operation to apply in [`IntBitset::set_op`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Intersection,
    Difference,
    SymmetricDifference,
}

impl SetOp {
    pub const ALL: [SetOp; 4] = [
        SetOp::Union,
        SetOp::Intersection,
        SetOp::Difference,
        SetOp::SymmetricDifference,
    ];
}

#[derive(Clone)]
pub struct IntBitset {
    words: Vec<u64>,
    max_id: RecordId,
}

impl Default for IntBitset {
    fn default() -> Self {
        Self::new()
    }
}

impl IntBitset {
    pub fn new() -> Self {
        Self::with_max_id(DEFAULT_MAX_ID)
    }

    pub fn with_max_id(max_id: RecordId) -> Self {
        IntBitset {
            words: Vec::new(),
            max_id,
        }
    }

    /// Builds a set from arbitrary (possibly repeated, unsorted) identifiers.
    pub fn from_ids<I>(ids: I) -> Result<Self, BitsetError>
    where
        I: IntoIterator,
        I::Item: Into<u64>,
    {
        Self::from_ids_with_max(ids, DEFAULT_MAX_ID)
    }

    pub fn from_ids_with_max<I>(ids: I, max_id: RecordId) -> Result<Self, BitsetError>
    where
        I: IntoIterator,
        I::Item: Into<u64>,
    {
        let mut set = Self::with_max_id(max_id);
        for id in ids {
            set.insert_wide(id.into())?;
        }
        Ok(set)
    }

    /// Builds a set from an ascending, duplicate-free id slice. Used on hot
    /// paths where the caller already holds sorted ids.
    pub fn from_sorted_ids(ids: &[RecordId]) -> Result<Self, BitsetError> {
        let mut set = Self::new();
        if let Some(&last) = ids.last() {
            set.check_id(last as u64)?;
            set.words = vec![0; last as usize / 64 + 1];
            for &id in ids {
                set.words[id as usize / 64] |= 1u64 << (id % WORD_BITS);
            }
        }
        Ok(set)
    }

    /// Adopts raw words, trimming trailing zero words.
    pub fn from_words(words: Vec<u64>, max_id: RecordId) -> Result<Self, BitsetError> {
        let mut set = IntBitset { words, max_id };
        set.trim();
        if let Some(top) = set.max() {
            set.check_id(top as u64)?;
        }
        Ok(set)
    }

    fn check_id(&self, id: u64) -> Result<(), BitsetError> {
        if id > self.max_id as u64 {
            return Err(BitsetError::IdOutOfRange {
                id,
                limit: self.max_id,
            });
        }
        Ok(())
    }

    fn insert_wide(&mut self, id: u64) -> Result<bool, BitsetError> {
        self.check_id(id)?;
        let word = (id / 64) as usize;
        if word >= self.words.len() {
            self.words.resize(word + 1, 0);
        }
        let mask = 1u64 << (id % 64);
        let fresh = self.words[word] & mask == 0;
        self.words[word] |= mask;
        Ok(fresh)
    }

    /// Inserts `id`, returning whether it was newly added.
    pub fn insert(&mut self, id: RecordId) -> Result<bool, BitsetError> {
        self.insert_wide(id as u64)
    }

    /// Removes `id`, returning whether it was present.
    pub fn remove(&mut self, id: RecordId) -> bool {
        let word = id as usize / 64;
        let Some(w) = self.words.get_mut(word) else {
            return false;
        };
        let mask = 1u64 << (id % WORD_BITS);
        let present = *w & mask != 0;
        *w &= !mask;
        self.trim();
        present
    }

    pub fn contains(&self, id: RecordId) -> bool {
        self.words
            .get(id as usize / 64)
            .is_some_and(|w| (w >> (id % WORD_BITS)) & 1 == 1)
    }

    /// Number of members (population count over all words).
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn max_id_limit(&self) -> RecordId {
        self.max_id
    }

    pub fn min(&self) -> Option<RecordId> {
        self.iter().next()
    }

    pub fn max(&self) -> Option<RecordId> {
        let last = *self.words.last()?;
        let bit = 63 - last.leading_zeros();
        Some(((self.words.len() - 1) as u64 * 64 + bit as u64) as RecordId)
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            words: &self.words,
            index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Iterates members from largest to smallest.
    pub fn iter_desc(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.words.iter().enumerate().rev().flat_map(|(i, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = 63 - word.leading_zeros();
                word &= !(1u64 << bit);
                Some((i as u64 * 64 + bit as u64) as RecordId)
            })
        })
    }

    pub fn to_ids(&self) -> Vec<RecordId> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(self.iter());
        out
    }

    /// Keeps only the `n` largest members.
    pub fn largest(&self, n: usize) -> IntBitset {
        let mut remaining = n;
        let mut words = vec![0u64; self.words.len()];
        for (i, &w) in self.words.iter().enumerate().rev() {
            if remaining == 0 {
                break;
            }
            let ones = w.count_ones() as usize;
            if ones <= remaining {
                words[i] = w;
                remaining -= ones;
            } else {
                let mut word = w;
                let mut kept = 0u64;
                while remaining > 0 {
                    let bit = 63 - word.leading_zeros();
                    kept |= 1u64 << bit;
                    word &= !(1u64 << bit);
                    remaining -= 1;
                }
                words[i] = kept;
            }
        }
        let mut out = IntBitset {
            words,
            max_id: self.max_id,
        };
        out.trim();
        out
    }

    pub fn set_op(kind: SetOp, a: &IntBitset, b: &IntBitset) -> IntBitset {
        let max_id = a.max_id.max(b.max_id);
        let words = match kind {
            SetOp::Union | SetOp::SymmetricDifference => {
                let (long, short) = if a.words.len() >= b.words.len() {
                    (&a.words, &b.words)
                } else {
                    (&b.words, &a.words)
                };
                let mut out = long.clone();
                for (o, s) in out.iter_mut().zip(short) {
                    if kind == SetOp::Union {
                        *o |= s;
                    } else {
                        *o ^= s;
                    }
                }
                out
            }
            SetOp::Intersection => a.words.iter().zip(&b.words).map(|(x, y)| x & y).collect(),
            SetOp::Difference => {
                let mut out = a.words.clone();
                for (o, y) in out.iter_mut().zip(&b.words) {
                    *o &= !y;
                }
                out
            }
        };
        let mut out = IntBitset { words, max_id };
        out.trim();
        out
    }

    pub fn union(&self, other: &IntBitset) -> IntBitset {
        Self::set_op(SetOp::Union, self, other)
    }

    pub fn intersection(&self, other: &IntBitset) -> IntBitset {
        Self::set_op(SetOp::Intersection, self, other)
    }

    pub fn difference(&self, other: &IntBitset) -> IntBitset {
        Self::set_op(SetOp::Difference, self, other)
    }

    pub fn symmetric_difference(&self, other: &IntBitset) -> IntBitset {
        Self::set_op(SetOp::SymmetricDifference, self, other)
    }

    pub fn is_subset(&self, other: &IntBitset) -> bool {
        self.words.len() <= other.words.len()
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    /// Encodes the set in the `IBS1` wire format.
    pub fn serialize(&self) -> Vec<u8> {
        let raw_len = self.words.len() * 8;
        let compress = raw_len >= COMPRESSION_THRESHOLD;
        let mut out = Vec::with_capacity(HEADER_LEN + if compress { raw_len / 4 } else { raw_len });
        out.extend_from_slice(&MAGIC);
        out.push(FORMAT_VERSION);
        out.push(if compress { FLAG_DEFLATE } else { 0 });
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&(self.words.len() as u64).to_le_bytes());
        if compress {
            let raw = words_to_bytes(&self.words);
            let mut enc = DeflateEncoder::new(out, Compression::fast());
            enc.write_all(&raw).expect("in-memory deflate cannot fail");
            enc.finish().expect("in-memory deflate cannot fail")
        } else {
            for w in &self.words {
                out.extend_from_slice(&w.to_le_bytes());
            }
            out
        }
    }

    pub fn deserialize(bytes: &[u8]) -> Result<IntBitset, BitsetError> {
        Self::deserialize_with_max(bytes, DEFAULT_MAX_ID)
    }

    /// Decodes an `IBS1` payload, refusing anything whose identifiers could
    /// exceed `max_id`. Never allocates more than the word budget implied by
    /// `max_id`.
    pub fn deserialize_with_max(bytes: &[u8], max_id: RecordId) -> Result<IntBitset, BitsetError> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(BitsetError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(BitsetError::TruncatedPayload {
                expected: HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let version = bytes[4];
        let flags = bytes[5];
        if version != FORMAT_VERSION || flags & !FLAG_DEFLATE != 0 || bytes[6..8] != [0, 0] {
            return Err(BitsetError::UnsupportedVersion { version, flags });
        }
        let word_count = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));
        let max_words = max_id as u64 / 64 + 1;
        if word_count > max_words {
            return Err(BitsetError::LimitExceeded {
                implied: word_count.saturating_mul(64).saturating_sub(1),
                limit: max_id,
            });
        }
        let expected = word_count * 8;
        let payload = &bytes[HEADER_LEN..];
        let raw: Vec<u8>;
        let data: &[u8] = if flags & FLAG_DEFLATE != 0 {
            // Read one byte past the announced size to detect oversized streams.
            let mut buf = Vec::with_capacity(expected as usize);
            let mut dec = DeflateDecoder::new(payload).take(expected + 1);
            match dec.read_to_end(&mut buf) {
                Ok(_) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                    return Err(BitsetError::TruncatedPayload {
                        expected,
                        found: buf.len() as u64,
                    })
                }
                Err(e) => return Err(BitsetError::CorruptPayload(e.to_string())),
            }
            if buf.len() as u64 != expected {
                return Err(BitsetError::PayloadSizeMismatch {
                    expected,
                    found: buf.len() as u64,
                });
            }
            raw = buf;
            &raw
        } else {
            match (payload.len() as u64).cmp(&expected) {
                Ordering::Less => {
                    return Err(BitsetError::TruncatedPayload {
                        expected,
                        found: payload.len() as u64,
                    })
                }
                Ordering::Greater => {
                    return Err(BitsetError::PayloadSizeMismatch {
                        expected,
                        found: payload.len() as u64,
                    })
                }
                Ordering::Equal => payload,
            }
        };
        let words = data
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut set = IntBitset { words, max_id };
        set.trim();
        if let Some(top) = set.max() {
            if top > max_id {
                return Err(BitsetError::LimitExceeded {
                    implied: top as u64,
                    limit: max_id,
                });
            }
        }
        Ok(set)
    }
}

fn words_to_bytes(words: &[u64]) -> Vec<u8> {
    let mut raw = Vec::with_capacity(words.len() * 8);
    for w in words {
        raw.extend_from_slice(&w.to_le_bytes());
    }
    raw
}

/// Sets compare by membership only; the id limit is configuration.
impl PartialEq for IntBitset {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
    }
}

impl Eq for IntBitset {}

impl fmt::Debug for IntBitset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.len();
        if n <= 32 {
            f.debug_set().entries(self.iter()).finish()
        } else {
            write!(f, "IntBitset {{ len: {n}, min: {:?}, max: {:?} }}", self.min(), self.max())
        }
    }
}

pub struct Iter<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Iter<'_> {
    type Item = RecordId;

    fn next(&mut self) -> Option<RecordId> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros();
                self.current &= self.current - 1;
                return Some((self.index as u64 * 64 + bit as u64) as RecordId);
            }
            self.index += 1;
            self.current = *self.words.get(self.index)?;
        }
    }
}

impl<'a> IntoIterator for &'a IntBitset {
    type Item = RecordId;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

impl BitOr for &IntBitset {
    type Output = IntBitset;
    fn bitor(self, rhs: &IntBitset) -> IntBitset {
        self.union(rhs)
    }
}

impl BitAnd for &IntBitset {
    type Output = IntBitset;
    fn bitand(self, rhs: &IntBitset) -> IntBitset {
        self.intersection(rhs)
    }
}

impl BitXor for &IntBitset {
    type Output = IntBitset;
    fn bitxor(self, rhs: &IntBitset) -> IntBitset {
        self.symmetric_difference(rhs)
    }
}

impl Sub for &IntBitset {
    type Output = IntBitset;
    fn sub(self, rhs: &IntBitset) -> IntBitset {
        self.difference(rhs)
    }
}
