//! Search-and-rank latency report in the shape of a two-engine comparison
//! table: one hit count row and five timing rows per engine.

use std::fmt::Write as _;
use std::time::Instant;

use crate::bridge::{search_then_rank, BridgeError, FieldWeights, Query, RankConfig, SearchRankAdapter};

/// Rank depths timed by the benchmark, in row order.
pub const RANK_DEPTHS: [usize; 4] = [10, 100, 1_000, 10_000];

pub const MIN_REPS: usize = 3;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub query: Query,
    /// Raw query text, for the report header.
    pub query_text: String,
    pub weights: FieldWeights,
    pub reps: usize,
    pub hitset_cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusDescriptor {
    pub docs: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineTimings {
    pub engine: String,
    pub hit_count: usize,
    pub search_secs: f64,
    /// Median seconds per entry of [`RANK_DEPTHS`].
    pub rank_secs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub query_text: String,
    pub corpus: CorpusDescriptor,
    pub reps: usize,
    pub engines: Vec<EngineTimings>,
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

/// One warm-up call, then the median of `reps` timed calls.
fn time_median<T>(
    reps: usize,
    mut f: impl FnMut() -> Result<T, BridgeError>,
) -> Result<(T, f64), BridgeError> {
    let mut last = f()?;
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        last = std::hint::black_box(f()?);
        samples.push(start.elapsed().as_secs_f64());
    }
    Ok((last, median(samples)))
}

/// Times search and ranked retrieval on each engine. Engines must already be
/// committed; they are only read.
pub fn run_bench(
    engines: &[(&str, &dyn SearchRankAdapter)],
    config: &BenchConfig,
    corpus: CorpusDescriptor,
) -> Result<BenchReport, BridgeError> {
    let reps = config.reps.max(MIN_REPS);
    let mut rows = Vec::with_capacity(engines.len());
    for &(name, adapter) in engines {
        let (hits, search_secs) = time_median(reps, || adapter.search(&config.query))?;
        let mut rank_secs = Vec::with_capacity(RANK_DEPTHS.len());
        for k in RANK_DEPTHS {
            let rank_config = RankConfig {
                hitset_cap: config.hitset_cap,
                top_k: k,
            };
            let (_, secs) = time_median(reps, || {
                search_then_rank(adapter, &config.query, &config.weights, &rank_config)
            })?;
            rank_secs.push(secs);
        }
        rows.push(EngineTimings {
            engine: name.to_string(),
            hit_count: hits.len(),
            search_secs,
            rank_secs,
        });
    }
    Ok(BenchReport {
        query_text: config.query_text.clone(),
        corpus,
        reps,
        engines: rows,
    })
}

/// Row labels, count row first.
pub fn metric_labels() -> [&'static str; 6] {
    [
        "Search result count",
        "Search [sec]",
        "Ranked top 10 [sec]",
        "Ranked top 100 [sec]",
        "Ranked top 1K [sec]",
        "Ranked 10K [sec]",
    ]
}

const METRIC_KEYS: [&str; 6] = [
    "search_result_count",
    "search",
    "ranked_top_10",
    "ranked_top_100",
    "ranked_top_1000",
    "ranked_10000",
];

fn fmt_secs(s: f64) -> String {
    format!("{s:.6}")
}

impl EngineTimings {
    /// Cell values in row order, formatted identically for CSV and table.
    pub fn cells(&self) -> Vec<String> {
        let mut cells = vec![self.hit_count.to_string(), fmt_secs(self.search_secs)];
        cells.extend(self.rank_secs.iter().map(|&s| fmt_secs(s)));
        cells
    }
}

impl BenchReport {
    /// `engine,metric,seconds`; the count row carries the hit count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("engine,metric,seconds\n");
        for e in &self.engines {
            for (key, cell) in METRIC_KEYS.iter().zip(e.cells()) {
                let _ = writeln!(out, "{},{key},{cell}", e.engine);
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let seed = self.corpus.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        let _ = writeln!(
            out,
            "query: \"{}\"  docs: {}  seed: {}  reps: {} (median)",
            self.query_text, self.corpus.docs, seed, self.reps
        );
        let label_width = 22;
        let col = self
            .engines
            .iter()
            .map(|e| e.engine.len())
            .chain(std::iter::once(12))
            .max()
            .unwrap_or(12);
        let _ = write!(out, "{:<label_width$}", "");
        for e in &self.engines {
            let _ = write!(out, "  {:>col$}", e.engine);
        }
        out.push('\n');
        let cells: Vec<Vec<String>> = self.engines.iter().map(EngineTimings::cells).collect();
        for (row, label) in metric_labels().iter().enumerate() {
            let _ = write!(out, "{label:<label_width$}");
            for c in &cells {
                let _ = write!(out, "  {:>col$}", c[row]);
            }
            out.push('\n');
        }
        out
    }

    /// Checks the qualitative pattern: the unified engine is faster at small
    /// depths, the per-field engine degrades less from top 10 to 10K.
    /// Returns human-readable warnings; an empty list means the pattern held.
    pub fn shape_warnings(&self) -> Vec<String> {
        let find = |name: &str| self.engines.iter().find(|e| e.engine == name);
        let (Some(u), Some(p)) = (find("unified"), find("perfield")) else {
            return vec!["shape check needs both the unified and perfield engines".to_string()];
        };
        let mut warnings = Vec::new();
        if u.rank_secs[0] >= p.rank_secs[0] {
            warnings.push(format!(
                "unified top-10 ranking ({:.6}s) is not faster than perfield ({:.6}s)",
                u.rank_secs[0], p.rank_secs[0]
            ));
        }
        let growth = |e: &EngineTimings| e.rank_secs[3] / e.rank_secs[0].max(f64::MIN_POSITIVE);
        if growth(p) >= growth(u) {
            warnings.push(format!(
                "perfield is not flatter across depths: 10K/10 ratio {:.2} vs unified {:.2}",
                growth(p),
                growth(u)
            ));
        }
        if u.hit_count != p.hit_count {
            warnings.push(format!("hit counts differ: unified {} vs perfield {}", u.hit_count, p.hit_count));
        }
        warnings
    }
}
