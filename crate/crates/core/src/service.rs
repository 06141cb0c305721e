//! HTTP API over a loaded index and (optionally) a trained model.
//!
//! | route              | handler                  |
//! |--------------------|--------------------------|
//! | `POST /api/search` | [`AppState::search`]     |
//! | `GET /api/documents` | [`AppState::documents`] |
//! | `GET /api/health`  | [`AppState::health`]     |
//! | `GET /`            | UI assets                |
//!
//! The index and model live in an immutable [`Snapshot`] behind an `Arc`;
//! [`AppState::swap_snapshot`] replaces it between requests.

use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::embedder::{embed_batch, EmbeddingCache, EmbeddingProvider, ProviderConfig};
use crate::error::{Error, Result};
use crate::index::{Document, Scorer, SearchIndex, DEFAULT_K};
use crate::io::load_corpus;
use crate::simnet::SimilarityModel;

pub const MAX_K: usize = 100;
pub const MAX_QUERY_BYTES: usize = 8192;

const FALLBACK_PAGE: &str = include_str!("../assets/index.html");

/// Contents of the `--config` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub corpus: PathBuf,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub encoder: ProviderConfig,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    /// Directory of built UI assets served at `/`.
    #[serde(default)]
    pub ui_dir: Option<PathBuf>,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// What a request sees: one corpus and at most one model.
#[derive(Debug)]
pub struct Snapshot {
    pub index: SearchIndex,
    pub model: Option<SimilarityModel>,
}

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    provider: Arc<dyn EmbeddingProvider>,
    cache: Arc<EmbeddingCache>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SearchRequest {
    pub query: String,
    #[serde(default = "default_k")]
    pub k: i64,
    #[serde(default)]
    pub scorer: Option<String>,
}

fn default_k() -> i64 {
    DEFAULT_K as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub title: String,
    pub url: Option<String>,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<SearchHit>,
    pub scorer: String,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentEntry {
    pub doc_id: String,
    pub title: String,
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub corpus_size: usize,
    pub model_loaded: bool,
    pub encoder: String,
}

/// An error with the HTTP status it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Transport { .. } | Error::DimensionMismatch { .. } => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message });
        (self.status, Json(body)).into_response()
    }
}

/// Parsed and validated search parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScorerChoice {
    Learned,
    Cosine,
}

impl AppState {
    pub fn new(
        snapshot: Snapshot,
        provider: Arc<dyn EmbeddingProvider>,
        cache: Arc<EmbeddingCache>,
    ) -> Self {
        AppState {
            snapshot: RwLock::new(Arc::new(snapshot)),
            provider,
            cache,
        }
    }

    /// Loads corpus, model and cache named by `config` and embeds the corpus.
    /// Must run outside an async runtime when the encoder is remote.
    pub fn from_config(config: &ServiceConfig) -> Result<Self> {
        let provider: Arc<dyn EmbeddingProvider> = Arc::from(config.encoder.build()?);
        let cache = Arc::new(match &config.cache {
            Some(path) => EmbeddingCache::load_or_new(path, provider.dim())?,
            None => EmbeddingCache::new(provider.dim()),
        });
        let docs = load_corpus(&config.corpus)?;
        let index = SearchIndex::build(docs, provider.as_ref(), &cache)?;
        if let Some(path) = &config.cache {
            cache.save(path)?;
        }
        let model = config
            .model
            .as_deref()
            .map(SimilarityModel::load)
            .transpose()?;
        Ok(Self::new(Snapshot { index, model }, provider, cache))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().unwrap().clone()
    }

    /// Atomically replaces the index/model seen by subsequent requests.
    pub fn swap_snapshot(&self, next: Snapshot) {
        *self.snapshot.write().unwrap() = Arc::new(next);
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    /// Parses a raw request body; every failure here is a 400.
    pub fn parse_search(body: &[u8]) -> Result<SearchRequest, ApiError> {
        let req: SearchRequest = serde_json::from_slice(body)
            .map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))?;
        Ok(req)
    }

    fn validate(req: &SearchRequest) -> Result<(usize, ScorerChoice), ApiError> {
        if req.query.trim().is_empty() {
            return Err(ApiError::bad_request("query must be non-empty"));
        }
        if req.query.len() > MAX_QUERY_BYTES {
            return Err(ApiError::bad_request(format!(
                "query exceeds {MAX_QUERY_BYTES} bytes"
            )));
        }
        if req.k < 1 || req.k > MAX_K as i64 {
            return Err(ApiError::bad_request(format!(
                "k must be between 1 and {MAX_K}"
            )));
        }
        let scorer = match req.scorer.as_deref().unwrap_or("learned") {
            "learned" => ScorerChoice::Learned,
            "cosine" => ScorerChoice::Cosine,
            other => return Err(ApiError::bad_request(format!("unknown scorer `{other}`"))),
        };
        Ok((req.k as usize, scorer))
    }

    /// Embeds the query, ranks the current snapshot and returns the top k.
    /// Blocks on the encoder.
    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse, ApiError> {
        let started = Instant::now();
        let (k, choice) = Self::validate(req)?;
        let snap = self.snapshot();
        let scorer = match (choice, &snap.model) {
            (ScorerChoice::Cosine, _) => Scorer::Cosine,
            (ScorerChoice::Learned, Some(model)) => Scorer::Learned(model),
            (ScorerChoice::Learned, None) => {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "learned scorer requested but no model is loaded",
                ))
            }
        };
        let query = embed_batch(&[req.query.as_str()], self.provider.as_ref(), &self.cache)?
            .pop()
            .expect("one vector per text");
        let ranked = snap.index.rank(&query, scorer, k)?;
        let results = ranked
            .into_iter()
            .map(|r| {
                let doc = snap
                    .index
                    .document(&r.doc_id)
                    .expect("ranked ids come from the index");
                SearchHit {
                    doc_id: r.doc_id,
                    title: doc.title.clone(),
                    url: doc.url.clone(),
                    score: r.score,
                    rank: r.rank,
                }
            })
            .collect();
        Ok(SearchResponse {
            results,
            scorer: scorer.name().to_string(),
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn documents(&self) -> Vec<DocumentEntry> {
        self.snapshot()
            .index
            .documents()
            .iter()
            .map(|d: &Document| DocumentEntry {
                doc_id: d.id.clone(),
                title: d.title.clone(),
                url: d.url.clone(),
            })
            .collect()
    }

    pub fn health(&self) -> Health {
        let snap = self.snapshot();
        Health {
            status: "ok".into(),
            corpus_size: snap.index.len(),
            model_loaded: snap.model.is_some(),
            encoder: self.provider.kind().as_str().into(),
        }
    }
}

async fn search_handler(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Json<SearchResponse>, ApiError> {
    let req = AppState::parse_search(&body)?;
    let resp = tokio::task::spawn_blocking(move || state.search(&req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(resp))
}

async fn documents_handler(State(state): State<Arc<AppState>>) -> Json<Vec<DocumentEntry>> {
    Json(state.documents())
}

async fn health_handler(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(state.health())
}

async fn fallback_page() -> Html<&'static str> {
    Html(FALLBACK_PAGE)
}

/// API routes plus UI assets from `ui_dir` (or a built-in page).
pub fn router(state: Arc<AppState>, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/search", post(search_handler))
        .route("/api/documents", get(documents_handler))
        .route("/api/health", get(health_handler))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(fallback_page)),
    }
}

/// Serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, listen: &str, ui_dir: Option<&Path>) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .map_err(|e| Error::io(format!("binding {listen}"), e))?;
    let app = router(state, ui_dir);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io("serving", e))
}
