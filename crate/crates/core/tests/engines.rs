#[path = "support/oracle.rs"]
mod oracle;

use oracle::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use searchbridge::{
    FieldName, FieldWeights, IntBitset, PerFieldEngine, Query, QueryKind, SearchRankAdapter, UnifiedEngine,
};

fn engines(records: &[searchbridge::Record]) -> (UnifiedEngine, PerFieldEngine) {
    let mut u = UnifiedEngine::new();
    let mut p = PerFieldEngine::new();
    u.index_records(records).unwrap();
    p.index_records(records).unwrap();
    u.commit().unwrap();
    p.commit().unwrap();
    (u, p)
}

#[test]
fn unified_postings_match_scan() {
    let corpus = random_corpus(11, 200);
    let (u, p) = engines(&corpus.records);
    for field in FieldName::ALL {
        let expected = scan_postings(&corpus.records, field);
        let idx = u.field_index(field);
        assert_eq!(idx.term_count(), expected.len(), "{field}");
        for (term, list) in idx.terms() {
            let got: Vec<(u32, Vec<u32>)> = list.entries().iter().map(|e| (e.doc, e.positions.clone())).collect();
            assert_eq!(&got, &expected[term], "{field}/{term}");
        }
        assert_eq!(idx.doc_count(), corpus.records.len());
        // per-field databases are structurally the same index
        let db = p.database(field);
        assert_eq!(db.doc_count(), idx.doc_count());
        assert_eq!(db.avg_field_length(), idx.avg_field_length());
        for (term, list) in idx.terms() {
            assert_eq!(db.postings(term), Some(list));
        }
    }
}

#[test]
fn search_matches_positional_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..25 {
        let corpus = random_corpus(seed, 200);
        let (u, p) = engines(&corpus.records);
        for _ in 0..20 {
            let field = FieldName::ALL[rng.random_range(0..5)];
            let len = rng.random_range(1..=3);
            let terms = random_terms(&mut rng, &corpus.vocab, len);
            for kind in [QueryKind::Word, QueryKind::Phrase] {
                let q = Query::from_terms(field, kind, terms.clone()).unwrap();
                let expected = match kind {
                    QueryKind::Word => word_scan(&corpus.records, field, &terms),
                    QueryKind::Phrase => phrase_scan(&corpus.records, field, &terms),
                };
                assert_eq!(u.search(&q).unwrap().to_ids(), expected, "unified {q:?}");
                assert_eq!(p.search(&q).unwrap().to_ids(), expected, "perfield {q:?}");
            }
        }
    }
}

#[test]
fn weighted_scores_match_naive_bm25() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 100..112 {
        let corpus = random_corpus(seed, 120);
        let (u, p) = engines(&corpus.records);
        let all = IntBitset::from_ids(corpus.records.iter().map(|r| r.id)).unwrap();
        for _ in 0..5 {
            let n = rng.random_range(1..=3);
            let terms = random_terms(&mut rng, &corpus.vocab, n);
            let pairs: Vec<(FieldName, f64)> = FieldName::ALL
                .into_iter()
                .map(|f| (f, if rng.random_bool(0.6) { rng.random_range(0.1..3.0) } else { 0.0 }))
                .collect();
            let mut weights = FieldWeights::new();
            for &(f, w) in &pairs {
                weights.set(f, w);
            }
            let q = Query::from_terms(FieldName::Fulltext, QueryKind::Word, terms.clone()).unwrap();
            for scored in [
                u.rank(&q, &all, &weights, usize::MAX).unwrap(),
                p.rank(&q, &all, &weights, usize::MAX).unwrap(),
            ] {
                let mut expected_nonzero = 0;
                for r in &corpus.records {
                    let expected = naive_weighted(&corpus.records, &pairs, &terms, r.id);
                    let got = scored.iter().find(|s| s.id == r.id).map_or(0.0, |s| s.score);
                    assert!(relative_close(got, expected, 1e-9), "doc {}: {got} vs {expected}", r.id);
                    if expected > 0.0 {
                        expected_nonzero += 1;
                    }
                }
                assert_eq!(scored.len(), expected_nonzero);
            }
        }
    }
}

#[test]
fn cross_engine_rank_is_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 300..320 {
        let corpus = random_corpus(seed, 200);
        let (u, p) = engines(&corpus.records);
        let all = IntBitset::from_ids(corpus.records.iter().map(|r| r.id)).unwrap();
        for _ in 0..5 {
            let n = rng.random_range(1..=4);
            let terms = random_terms(&mut rng, &corpus.vocab, n);
            let mut weights = FieldWeights::new();
            for f in FieldName::ALL {
                weights.set(f, rng.random_range(0.0..2.0));
            }
            let q = Query::from_terms(FieldName::Title, QueryKind::Word, terms).unwrap();
            let k = rng.random_range(1..50);
            assert_eq!(u.rank(&q, &all, &weights, k).unwrap(), p.rank(&q, &all, &weights, k).unwrap());
        }
    }
}
