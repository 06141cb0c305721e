//! The `tinysearch` command.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O or transport
//! error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::embedder::{embed_batch, EmbeddingCache, EmbeddingProvider, ProviderConfig};
use crate::error::{Error, Result};
use crate::evalkit::evaluate_run;
use crate::index::{Scorer, SearchIndex, DEFAULT_K};
use crate::io::{load_corpus, load_gold, load_pairs};
use crate::service::{self, AppState, ServiceConfig};
use crate::simnet::{self, PairExample, SimilarityModel, TrainConfig, DEFAULT_DROPOUT, DEFAULT_HIDDEN};

#[derive(Debug, Parser)]
#[command(name = "tinysearch", version, about = "Semantic document search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a corpus and write the embedding cache
    Ingest(Common),
    /// Train the similarity model on labeled text pairs
    Train(TrainArgs),
    /// Rank the corpus for one query
    Search(SearchArgs),
    /// Precision / recall / F1 against gold judgments
    Eval(EvalArgs),
    /// Run the HTTP service
    Serve(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Config file (JSON); flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus JSONL, one document per line
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Embedding cache JSONL; created if missing
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Similarity model JSON (written by train, read elsewhere)
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Labeled pairs JSONL: text_a, text_b, label (0 or 1)
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 200)]
    pub batch_size: usize,
    /// Trailing fraction held out for validation
    #[arg(long, default_value_t = 0.3)]
    pub val_split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value = "learned", value_parser = ["learned", "cosine"])]
    pub scorer: String,
    /// Emit JSON instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub rank: RankArgs,
    /// Query text
    #[arg(long)]
    pub query: String,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub rank: RankArgs,
    /// Gold judgments JSONL: query, relevant_ids
    #[arg(long)]
    pub gold: PathBuf,
}

/// Config file fields, all optional so any subcommand can share one file.
#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    listen: Option<String>,
    corpus: Option<PathBuf>,
    model: Option<PathBuf>,
    encoder: Option<ProviderConfig>,
    cache: Option<PathBuf>,
    ui_dir: Option<PathBuf>,
}

/// Flags merged over the config file.
struct Resolved {
    listen: Option<String>,
    corpus: Option<PathBuf>,
    model: Option<PathBuf>,
    cache: Option<PathBuf>,
    encoder: ProviderConfig,
    ui_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        Ok(Resolved {
            listen: file.listen,
            corpus: self.corpus.clone().or(file.corpus),
            model: self.model.clone().or(file.model),
            cache: self.cache.clone().or(file.cache),
            encoder: file.encoder.unwrap_or_default(),
            ui_dir: file.ui_dir,
        })
    }
}

impl Resolved {
    fn corpus(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| Error::Config("--corpus is required".into()))
    }

    fn model(&self) -> Result<&Path> {
        self.model
            .as_deref()
            .ok_or_else(|| Error::Config("--model is required".into()))
    }

    fn provider(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.encoder.build()
    }

    fn open_cache(&self, dim: usize) -> Result<EmbeddingCache> {
        match &self.cache {
            Some(path) => EmbeddingCache::load_or_new(path, dim),
            None => Ok(EmbeddingCache::new(dim)),
        }
    }

    fn save_cache(&self, cache: &EmbeddingCache) -> Result<()> {
        match &self.cache {
            Some(path) => cache.save(path),
            None => Ok(()),
        }
    }

    fn build_index(
        &self,
        provider: &dyn EmbeddingProvider,
        cache: &EmbeddingCache,
    ) -> Result<SearchIndex> {
        let docs = load_corpus(self.corpus()?)?;
        SearchIndex::build(docs, provider, cache)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    1
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("writing output", e)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Ingest(common) => ingest(&common, out),
        Command::Train(args) => train(&args, out),
        Command::Search(args) => search(&args, out),
        Command::Eval(args) => eval(&args, out),
        Command::Serve(common) => serve(&common),
    }
}

fn ingest(common: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = common.resolve()?;
    if cfg.cache.is_none() {
        return Err(Error::Config("ingest requires --cache".into()));
    }
    let provider = cfg.provider()?;
    let cache = cfg.open_cache(provider.dim())?;
    let before = cache.len();
    let index = cfg.build_index(provider.as_ref(), &cache)?;
    cfg.save_cache(&cache)?;
    writeln!(
        out,
        "embedded {} documents ({} new cache entries, {} total)",
        index.len(),
        cache.len() - before,
        cache.len()
    )
    .map_err(io_err)
}

fn train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.common.resolve()?;
    let model_path = cfg.model()?.to_path_buf();
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        validation_split: args.val_split,
        shuffle_seed: args.seed,
        ..TrainConfig::default()
    };
    config.validate()?;

    let pairs = load_pairs(&args.pairs)?;
    let provider = cfg.provider()?;
    let cache = cfg.open_cache(provider.dim())?;
    let texts: Vec<&str> = pairs
        .iter()
        .flat_map(|p| [p.text_a.as_str(), p.text_b.as_str()])
        .collect();
    let vectors = embed_batch(&texts, provider.as_ref(), &cache)?;
    cfg.save_cache(&cache)?;
    let data = pairs
        .iter()
        .zip(vectors.chunks_exact(2))
        .map(|(p, v)| PairExample::new(&v[0], &v[1], p.label))
        .collect::<Result<Vec<_>>>()?;

    let model = SimilarityModel::new(provider.dim(), &DEFAULT_HIDDEN, DEFAULT_DROPOUT, args.seed)?;
    let mut write_err = None;
    let (model, _history) = simnet::train_with(model, &data, &config, |r| {
        if write_err.is_none() {
            write_err = writeln!(
                out,
                "epoch {}: train_loss={:.4} train_acc={:.4} val_loss={:.4} val_acc={:.4}",
                r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
            )
            .err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(io_err(e));
    }
    model.save(&model_path)?;
    writeln!(out, "saved model to {}", model_path.display()).map_err(io_err)
}

fn load_model_for(scorer: &str, cfg: &Resolved) -> Result<Option<SimilarityModel>> {
    if scorer == "learned" {
        Ok(Some(SimilarityModel::load(cfg.model()?)?))
    } else {
        Ok(None)
    }
}

fn scorer_of(model: Option<&SimilarityModel>) -> Scorer<'_> {
    match model {
        Some(m) => Scorer::Learned(m),
        None => Scorer::Cosine,
    }
}

fn search(args: &SearchArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.common.resolve()?;
    if args.query.trim().is_empty() {
        return Err(Error::Validation("query must be non-empty".into()));
    }
    let model = load_model_for(&args.rank.scorer, &cfg)?;
    let provider = cfg.provider()?;
    let cache = cfg.open_cache(provider.dim())?;
    let index = cfg.build_index(provider.as_ref(), &cache)?;
    let query = embed_batch(&[args.query.as_str()], provider.as_ref(), &cache)?
        .pop()
        .expect("one vector per text");
    cfg.save_cache(&cache)?;
    let results = index.rank(&query, scorer_of(model.as_ref()), args.rank.k)?;

    if args.rank.json {
        let rows: Vec<_> = results
            .iter()
            .map(|r| {
                let doc = index.document(&r.doc_id).expect("ranked ids come from the index");
                serde_json::json!({
                    "rank": r.rank,
                    "score": r.score,
                    "doc_id": r.doc_id,
                    "title": doc.title,
                    "url": doc.url,
                })
            })
            .collect();
        let body = serde_json::json!({ "scorer": args.rank.scorer, "results": rows });
        return writeln!(out, "{body:#}").map_err(io_err);
    }

    writeln!(out, "{:>4}  {:>6}  {:<8}  title", "rank", "score", "id").map_err(io_err)?;
    for r in &results {
        let doc = index.document(&r.doc_id).expect("ranked ids come from the index");
        writeln!(out, "{:>4}  {:>6.4}  {:<8}  {}", r.rank, r.score, r.doc_id, doc.title)
            .map_err(io_err)?;
    }
    Ok(())
}

fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.common.resolve()?;
    let model = load_model_for(&args.rank.scorer, &cfg)?;
    let gold = load_gold(&args.gold)?;
    let provider = cfg.provider()?;
    let cache = cfg.open_cache(provider.dim())?;
    let index = cfg.build_index(provider.as_ref(), &cache)?;
    let report = evaluate_run(
        &index,
        provider.as_ref(),
        &cache,
        &gold,
        scorer_of(model.as_ref()),
        args.rank.k,
    )?;
    cfg.save_cache(&cache)?;
    if args.rank.json {
        writeln!(out, "{:#}", report.to_json()).map_err(io_err)
    } else {
        write!(out, "{}", report.render_table()).map_err(io_err)
    }
}

fn serve(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let config = ServiceConfig {
        listen: cfg.listen.clone().unwrap_or_else(|| "127.0.0.1:8080".into()),
        corpus: cfg.corpus()?.to_path_buf(),
        model: cfg.model.clone(),
        encoder: cfg.encoder.clone(),
        cache: cfg.cache.clone(),
        ui_dir: cfg.ui_dir.clone(),
    };
    let state = Arc::new(AppState::from_config(&config)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("starting runtime", e))?;
    eprintln!("listening on http://{}", config.listen);
    runtime.block_on(service::serve(state, &config.listen, config.ui_dir.as_deref()))
}
