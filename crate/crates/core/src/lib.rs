//! Semantic document search over fixed-length sentence embeddings.
//!
//! Documents and queries are mapped to embedding vectors by an external
//! encoder (or a deterministic hashing mock), then ranked either by cosine
//! similarity or by a feed-forward network trained on labeled text pairs.
//!
//! - [`embedder`]: encoder providers and the persistent embedding cache
//! - [`simnet`]: the pair-similarity network, its training loop and file format
//! - [`index`]: corpus storage and top-k ranking
//! - [`evalkit`]: precision / recall / F1 at a cutoff against gold judgments
//! - [`service`]: HTTP API
//! - [`cli`]: the `tinysearch` command

pub mod cli;
pub mod embedder;
mod error;
pub mod evalkit;
pub mod index;
pub mod io;
pub mod service;
pub mod simnet;

pub use embedder::{
    embed_batch, hash_embed, Embedding, EmbeddingCache, EmbeddingProvider, ProviderConfig,
    ProviderKind,
};
pub use error::{Error, Result};
pub use evalkit::{confusion_at_k, evaluate_run, prf, Confusion, EvalReport, GoldJudgment};
pub use index::{cosine, Document, RankedResult, Scorer, SearchIndex};
pub use simnet::{SimilarityModel, TrainConfig, TrainHistory};

/// Embedding width produced by the encoder.
pub const DEFAULT_DIM: usize = 768;
