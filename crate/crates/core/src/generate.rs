//! Deterministic synthetic corpora for tests and benchmarks.
//!
//! Vocabulary words are built from consonant-vowel syllables, so they can
//! never collide with the marker phrase terms. Word frequencies follow a Zipf
//! distribution. The marker phrase is planted in exactly
//! `round(marker_fraction * n_docs)` documents, and only those documents
//! contain marker terms at all.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::{analyze_terms, Record};

pub const DEFAULT_MARKER: &str = "higgs boson";

const CONSONANTS: &[u8] = b"bdfklmnprtvz";
const VOWELS: &[u8] = b"aeiou";

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_docs: usize,
    pub vocab_size: usize,
    pub mean_doc_len: usize,
    pub seed: u64,
    pub marker_fraction: f64,
    pub marker: String,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_docs: 1000,
            vocab_size: 5000,
            mean_doc_len: 120,
            seed: 42,
            marker_fraction: 0.3,
            marker: DEFAULT_MARKER.to_string(),
        }
    }
}

impl GenConfig {
    /// Number of documents that will carry the marker phrase.
    pub fn marker_count(&self) -> usize {
        ((self.marker_fraction.clamp(0.0, 1.0) * self.n_docs as f64).round() as usize).min(self.n_docs)
    }
}

/// Vocabulary word for a rank: two or more CV syllables.
pub fn vocab_word(rank: usize) -> String {
    let syllables = CONSONANTS.len() * VOWELS.len();
    let mut n = rank + syllables;
    let mut word = Vec::new();
    while n > 0 {
        let s = n % syllables;
        word.push(CONSONANTS[s / VOWELS.len()]);
        word.push(VOWELS[s % VOWELS.len()]);
        n /= syllables;
    }
    String::from_utf8(word).expect("ascii")
}

struct Sampler {
    rng: ChaCha8Rng,
    zipf: Zipf<f64>,
    vocab: Vec<String>,
}

impl Sampler {
    fn word(&mut self) -> &str {
        let rank = self.zipf.sample(&mut self.rng) as usize;
        &self.vocab[rank.clamp(1, self.vocab.len()) - 1]
    }

    fn words(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.word().to_string()).collect()
    }

    fn len_around(&mut self, mean: usize) -> usize {
        let mean = mean.max(1);
        self.rng.random_range(mean.div_ceil(2)..=mean + mean / 2)
    }
}

/// Generates `n_docs` records with ids `1..=n_docs`.
pub fn generate(config: &GenConfig) -> Vec<Record> {
    if config.n_docs == 0 {
        return Vec::new();
    }
    let vocab_size = config.vocab_size.max(1);
    let mut sampler = Sampler {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        zipf: Zipf::new(vocab_size as f64, 1.0).expect("valid zipf parameters"),
        vocab: (0..vocab_size).map(vocab_word).collect(),
    };
    let marker_terms = analyze_terms(&config.marker);

    let mut order: Vec<usize> = (0..config.n_docs).collect();
    order.shuffle(&mut sampler.rng);
    let mut is_marker = vec![false; config.n_docs];
    for &i in &order[..config.marker_count()] {
        is_marker[i] = true;
    }

    let mut records = Vec::with_capacity(config.n_docs);
    for (i, marked) in is_marker.into_iter().enumerate() {
        let id = (i + 1) as u32;
        let title_len = sampler.rng.random_range(4..=10);
        let mut title = sampler.words(title_len);
        let abstract_len = sampler.len_around(config.mean_doc_len / 4);
        let abstract_words = sampler.words(abstract_len);
        let n_authors = sampler.rng.random_range(1..=4);
        let authors = (0..n_authors)
            .map(|_| {
                let initial = (b'A' + sampler.rng.random_range(0..26u8)) as char;
                let mut surname = sampler.word().to_string();
                surname[..1].make_ascii_uppercase();
                format!("{surname}, {initial}")
            })
            .collect();
        let n_keywords = sampler.rng.random_range(2..=5);
        let keywords = sampler.words(n_keywords);
        let fulltext_len = sampler.len_around(config.mean_doc_len);
        let mut fulltext = sampler.words(fulltext_len);

        if marked && !marker_terms.is_empty() {
            let at = sampler.rng.random_range(0..=fulltext.len());
            fulltext.splice(at..at, marker_terms.iter().cloned());
            // A few loose marker terms give the ranking some tf spread.
            let extra = sampler.rng.random_range(0..=3);
            for _ in 0..extra {
                let term = marker_terms[sampler.rng.random_range(0..marker_terms.len())].clone();
                let at = sampler.rng.random_range(0..=fulltext.len());
                fulltext.insert(at, term);
            }
            if sampler.rng.random_bool(0.3) {
                let at = sampler.rng.random_range(0..=title.len());
                title.insert(at, marker_terms[0].clone());
            }
        }

        records.push(Record {
            id,
            title: title.join(" "),
            abstract_text: abstract_words.join(" "),
            authors,
            keywords,
            fulltext: fulltext.join(" "),
        });
    }
    records
}
