use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use searchbridge::benchmark::{run_bench, BenchConfig, CorpusDescriptor};
use searchbridge::bridge::{round_percent, DEFAULT_HITSET_CAP, DEFAULT_TOP_K};
use searchbridge::generate::{generate, GenConfig, DEFAULT_MARKER};
use searchbridge::service::{self, ServiceConfig};
use searchbridge::{
    find_similar, parse_jsonl, search_then_rank, write_jsonl, AdapterRegistry, FieldName, FieldWeights, MltParams,
    PerFieldEngine, Query, QueryKind, RankConfig, Record, SearchRankAdapter, UnifiedEngine,
};

#[derive(Parser)]
#[command(name = "searchbridge", version, about = "Search and word-similarity ranking over pluggable engines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index a corpus and print index statistics
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = EngineChoice::All)]
        engine: EngineChoice,
    },
    /// Run a word or phrase search and print the hit count
    Search {
        #[command(flatten)]
        query: QueryArgs,
        /// Also print matching record ids, one per line
        #[arg(long)]
        ids: bool,
    },
    /// Search, then rank the capped hitset by weighted word similarity
    Rank {
        #[command(flatten)]
        query: QueryArgs,
        /// Field weights, e.g. `title=2,fulltext=1`
        #[arg(long, default_value = "fulltext=1", value_parser = parse_weights)]
        weights: FieldWeights,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
        #[arg(long, default_value_t = DEFAULT_HITSET_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
        hitset_cap: u64,
    },
    /// Find records similar to a given record
    Similar {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        id: u32,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
        /// Source fields, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = FieldName::MLT_DEFAULT.map(|f| f.to_string()))]
        fields: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        max_tokens: usize,
        #[arg(long, default_value_t = 25)]
        max_query_terms: usize,
        #[arg(long, default_value_t = 2)]
        min_term_freq: usize,
        #[arg(long, default_value_t = 2)]
        min_doc_freq: usize,
        #[arg(long, value_enum, default_value_t = SingleEngine::Unified)]
        engine: SingleEngine,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Preload and commit this corpus instead of waiting for PUT /records
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 64 * 1024 * 1024)]
        max_body_bytes: usize,
        #[arg(long, default_value_t = DEFAULT_HITSET_CAP)]
        hitset_cap: usize,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
    },
    /// Time search and ranked retrieval on each engine
    Bench(BenchArgs),
    /// Write a deterministic synthetic corpus as JSON Lines
    GenCorpus {
        #[command(flatten)]
        gen: GenArgs,
        /// Output path, `-` for standard output
        #[arg(long, default_value = "-")]
        out: String,
    },
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "fulltext", value_parser = parse_field)]
    field: FieldName,
    #[arg(long, default_value = "word", value_parser = parse_kind)]
    kind: QueryKind,
    #[arg(long, value_enum, default_value_t = SingleEngine::Unified)]
    engine: SingleEngine,
    /// Query text, analyzed like indexed text
    text: String,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    docs: usize,
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    vocab: u64,
    #[arg(long, default_value_t = 120, value_parser = clap::value_parser!(u64).range(1..))]
    mean_len: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.3)]
    marker_fraction: f64,
    #[arg(long, default_value = DEFAULT_MARKER)]
    marker: String,
}

impl GenArgs {
    fn config(&self) -> GenConfig {
        GenConfig {
            n_docs: self.docs,
            vocab_size: self.vocab as usize,
            mean_doc_len: self.mean_len as usize,
            seed: self.seed,
            marker_fraction: self.marker_fraction,
            marker: self.marker.clone(),
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Corpus file; when absent a corpus is generated from the --gen-* flags
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Number of records to generate
    #[arg(long, alias = "generate", default_value_t = 50_000)]
    gen_docs: usize,
    #[arg(long, alias = "seed", default_value_t = 42)]
    gen_seed: u64,
    #[arg(long, default_value_t = 0.3)]
    gen_marker_fraction: f64,
    #[arg(long, default_value_t = 120)]
    gen_mean_len: usize,
    #[arg(long, default_value = DEFAULT_MARKER)]
    query: String,
    #[arg(long, default_value = "fulltext", value_parser = parse_field)]
    field: FieldName,
    #[arg(long, default_value = "phrase", value_parser = parse_kind)]
    kind: QueryKind,
    #[arg(long, default_value = "fulltext=1", value_parser = parse_weights)]
    weights: FieldWeights,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(3..))]
    reps: u64,
    #[arg(long, value_enum, default_value_t = EngineChoice::All)]
    engine: EngineChoice,
    #[arg(long, default_value_t = DEFAULT_HITSET_CAP)]
    hitset_cap: usize,
    /// Write `engine,metric,seconds` CSV here, `-` for standard output
    #[arg(long)]
    csv: Option<String>,
    /// Warn (without failing) when the expected latency pattern does not hold
    #[arg(long)]
    check_shape: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineChoice {
    Unified,
    Perfield,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SingleEngine {
    Unified,
    Perfield,
}

impl SingleEngine {
    fn choice(self) -> EngineChoice {
        match self {
            SingleEngine::Unified => EngineChoice::Unified,
            SingleEngine::Perfield => EngineChoice::Perfield,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SingleEngine::Unified => "unified",
            SingleEngine::Perfield => "perfield",
        }
    }
}

fn parse_field(s: &str) -> Result<FieldName, String> {
    s.parse().map_err(|e: searchbridge::corpus::UnknownField| e.to_string())
}

fn parse_kind(s: &str) -> Result<QueryKind, String> {
    s.parse()
}

fn parse_weights(s: &str) -> Result<FieldWeights, String> {
    FieldWeights::parse_list(s).map_err(|e| e.to_string())
}

fn read_corpus(path: &Path) -> anyhow::Result<Vec<Record>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn build_registry(records: &[Record], choice: EngineChoice) -> anyhow::Result<AdapterRegistry> {
    let mut registry = AdapterRegistry::new();
    if matches!(choice, EngineChoice::Unified | EngineChoice::All) {
        registry.register("unified", Box::new(UnifiedEngine::new()))?;
    }
    if matches!(choice, EngineChoice::Perfield | EngineChoice::All) {
        registry.register("perfield", Box::new(PerFieldEngine::new()))?;
    }
    registry.ingest(records)?;
    registry.commit_all()?;
    Ok(registry)
}

fn load(path: &Path, engine: SingleEngine) -> anyhow::Result<AdapterRegistry> {
    build_registry(&read_corpus(path)?, engine.choice())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Ingest { corpus, engine } => {
            let records = read_corpus(&corpus)?;
            let registry = build_registry(&records, engine)?;
            writeln!(out, "records: {}", records.len())?;
            writeln!(out, "engines: {}", registry.names().join(", "))?;
            let mut stats = UnifiedEngine::new();
            stats.index_records(&records)?;
            stats.commit()?;
            for field in FieldName::ALL {
                let idx = stats.field_index(field);
                writeln!(
                    out,
                    "{:<10} terms: {:<8} avg length: {:.2}",
                    field.as_str(),
                    idx.term_count(),
                    idx.avg_field_length()
                )?;
            }
        }
        Command::Search { query, ids } => {
            let registry = load(&query.corpus, query.engine)?;
            let q = Query::parse(query.field, query.kind, &query.text)?;
            let hits = registry.get(query.engine.name())?.search(&q)?;
            writeln!(out, "hits: {}", hits.len())?;
            if ids {
                for id in &hits {
                    writeln!(out, "{id}")?;
                }
            }
        }
        Command::Rank {
            query,
            weights,
            top_k,
            hitset_cap,
        } => {
            let registry = load(&query.corpus, query.engine)?;
            let q = Query::parse(query.field, query.kind, &query.text)?;
            let config = RankConfig {
                hitset_cap: hitset_cap as usize,
                top_k,
            };
            let outcome = search_then_rank(registry.get(query.engine.name())?, &q, &weights, &config)?;
            writeln!(out, "total hits: {}", outcome.hitset.len())?;
            writeln!(out, "{:>5}  {:>10}  {:>7}", "rank", "id", "percent")?;
            for (i, e) in outcome.ranked.entries().iter().enumerate() {
                writeln!(out, "{:>5}  {:>10}  {:>7.2}", i + 1, e.id, round_percent(e.percent))?;
            }
        }
        Command::Similar {
            corpus,
            id,
            top_k,
            fields,
            max_tokens,
            max_query_terms,
            min_term_freq,
            min_doc_freq,
            engine,
        } => {
            let source_fields = fields
                .iter()
                .map(|f| parse_field(f))
                .collect::<Result<Vec<_>, _>>()
                .map_err(anyhow::Error::msg)?;
            let registry = load(&corpus, engine)?;
            let params = MltParams {
                source_fields,
                max_tokens_per_field: max_tokens,
                max_query_terms,
                min_term_freq,
                min_doc_freq,
                top_k,
            };
            let ranked = find_similar(registry.get(engine.name())?, id, &params)?;
            writeln!(out, "{:>5}  {:>10}  {:>7}", "rank", "id", "percent")?;
            for (i, e) in ranked.entries().iter().enumerate() {
                writeln!(out, "{:>5}  {:>10}  {:>7.2}", i + 1, e.id, round_percent(e.percent))?;
            }
        }
        Command::Serve {
            listen,
            corpus,
            max_body_bytes,
            hitset_cap,
            top_k,
        } => {
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .try_init();
            let registry = match corpus {
                Some(path) => build_registry(&read_corpus(&path)?, EngineChoice::All)?,
                None => searchbridge::default_registry(),
            };
            let config = ServiceConfig {
                listen,
                hitset_cap,
                top_k,
                max_body_bytes,
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(service::serve(registry, config))?;
        }
        Command::Bench(args) => bench(args, &mut out)?,
        Command::GenCorpus { gen, out: path } => {
            let records = generate(&gen.config());
            if path == "-" {
                write_jsonl(&mut out, &records)?;
            } else {
                let file = File::create(&path).with_context(|| format!("creating {path}"))?;
                let mut w = BufWriter::new(file);
                write_jsonl(&mut w, &records)?;
                w.flush()?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn bench(args: BenchArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let (records, seed) = match &args.corpus {
        Some(path) => (read_corpus(path)?, None),
        None => {
            let config = GenConfig {
                n_docs: args.gen_docs,
                mean_doc_len: args.gen_mean_len.max(1),
                seed: args.gen_seed,
                marker_fraction: args.gen_marker_fraction,
                ..GenConfig::default()
            };
            (generate(&config), Some(args.gen_seed))
        }
    };
    let registry = build_registry(&records, args.engine)?;
    let query = Query::parse(args.field, args.kind, &args.query)?;
    let config = BenchConfig {
        query,
        query_text: args.query.clone(),
        weights: args.weights.clone(),
        reps: args.reps as usize,
        hitset_cap: args.hitset_cap,
    };
    // fixed row order: unified first
    let engines: Vec<(&str, &dyn SearchRankAdapter)> = ["unified", "perfield"]
        .into_iter()
        .filter_map(|name| registry.get(name).ok().map(|a| (name, a)))
        .collect();
    let report = run_bench(
        &engines,
        &config,
        CorpusDescriptor {
            docs: records.len(),
            seed,
        },
    )?;
    write!(out, "{}", report.to_table())?;
    match args.csv.as_deref() {
        Some("-") => write!(out, "{}", report.to_csv())?,
        Some(path) => std::fs::write(path, report.to_csv()).with_context(|| format!("writing {path}"))?,
        None => {}
    }
    if args.check_shape {
        for warning in report.shape_warnings() {
            eprintln!("warning: {warning}");
        }
    }
    if report.engines.len() == 2 && report.engines[0].hit_count != report.engines[1].hit_count {
        bail!("engines disagree on the hit count");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
