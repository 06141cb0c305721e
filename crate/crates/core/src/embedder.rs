//! Text → embedding vectors.
//!
//! Two providers sit behind [`EmbeddingProvider`]: a remote HTTP encoder and
//! a deterministic hashing mock ([`hash_embed`]). [`embed_batch`] fronts either
//! one with an [`EmbeddingCache`] keyed by the FNV-1a hash of the exact text,
//! and the cache persists to a JSONL file.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::RwLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::DEFAULT_DIM;

/// Environment variable that overrides the configured encoder endpoint.
pub const ENCODER_URL_ENV: &str = "TINYSEARCH_ENCODER_URL";

const FNV_OFFSET_BASIS: u64 = 14695981039346656037;
const FNV_PRIME: u64 = 1099511628211;

const CACHE_FORMAT: &str = "tinysearch-embcache";
const CACHE_VERSION: u32 = 1;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// A fixed-length vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("embedding must have dim >= 1".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "embedding component {i} is not finite"
            )));
        }
        Ok(Embedding(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Embedding(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Multiplies every component by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Embedding(self.0.iter().map(|v| v * factor).collect())
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        Embedding::new(values).map_err(serde::de::Error::custom)
    }
}

/// Bag-of-words feature hashing: each lowercased whitespace token adds ±1 to
/// component `h mod dim` (sign from the top bit of its FNV-1a hash), then the
/// vector is L2-normalized. Blank text yields the zero vector.
pub fn hash_embed(text: &str, dim: usize) -> Embedding {
    assert!(dim >= 1, "hash_embed requires dim >= 1");
    let mut values = vec![0.0f64; dim];
    let lowered = text.to_lowercase();
    for token in lowered.split_whitespace() {
        let h = fnv1a64(token.as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        values[(h % dim as u64) as usize] += sign;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    Embedding(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Remote,
    Mock,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::Remote => "remote",
            ProviderKind::Mock => "mock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::mock(DEFAULT_DIM)
    }
}

impl ProviderConfig {
    pub fn mock(dim: usize) -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            endpoint: None,
            timeout_ms: default_timeout_ms(),
            dim,
        }
    }

    pub fn remote(endpoint: impl Into<String>, dim: usize) -> Self {
        ProviderConfig {
            kind: ProviderKind::Remote,
            endpoint: Some(endpoint.into()),
            timeout_ms: default_timeout_ms(),
            dim,
        }
    }

    /// Endpoint after applying the `TINYSEARCH_ENCODER_URL` override.
    pub fn resolved_endpoint(&self) -> Option<String> {
        match std::env::var(ENCODER_URL_ENV) {
            Ok(url) if !url.trim().is_empty() => Some(url),
            _ => self.endpoint.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be >= 1".into()));
        }
        if self.kind == ProviderKind::Remote
            && self
                .resolved_endpoint()
                .is_none_or(|e| e.trim().is_empty())
        {
            return Err(Error::Config("remote encoder requires an endpoint".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.validate()?;
        Ok(match self.kind {
            ProviderKind::Mock => Box::new(MockProvider::new(self.dim)),
            ProviderKind::Remote => Box::new(RemoteProvider::new(
                self.resolved_endpoint().unwrap_or_default(),
                self.dim,
                Duration::from_millis(self.timeout_ms),
            )?),
        })
    }
}

/// Anything that turns a batch of texts into raw vectors.
///
/// Implementations may return vectors of the wrong width; [`embed_batch`]
/// checks them against [`EmbeddingProvider::dim`].
pub trait EmbeddingProvider: Send + Sync {
    fn kind(&self) -> ProviderKind;

    fn dim(&self) -> usize;

    fn encode(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>>;
}

#[derive(Debug, Clone)]
pub struct MockProvider {
    dim: usize,
}

impl MockProvider {
    pub fn new(dim: usize) -> Self {
        MockProvider { dim }
    }
}

impl EmbeddingProvider for MockProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Mock
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        Ok(texts
            .iter()
            .map(|t| hash_embed(t, self.dim).into_values())
            .collect())
    }
}

#[derive(Serialize)]
struct EncodeRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EncodeResponse {
    dim: usize,
    embeddings: Vec<Vec<f64>>,
}

/// Client for `POST {endpoint}/encode`.
pub struct RemoteProvider {
    endpoint: String,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(endpoint: impl Into<String>, dim: usize, timeout: Duration) -> Result<Self> {
        let endpoint = endpoint.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Transport {
                endpoint: endpoint.clone(),
                message: e.to_string(),
            })?;
        Ok(RemoteProvider {
            endpoint,
            dim,
            client,
        })
    }

    fn transport(&self, message: impl ToString) -> Error {
        Error::Transport {
            endpoint: self.endpoint.clone(),
            message: message.to_string(),
        }
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Remote
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let url = format!("{}/encode", self.endpoint.trim_end_matches('/'));
        let resp = self
            .client
            .post(&url)
            .json(&EncodeRequest { texts })
            .send()
            .map_err(|e| self.transport(e))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(self.transport(format!("HTTP {status}")));
        }
        let body: EncodeResponse = resp.json().map_err(|e| self.transport(e))?;
        if body.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: body.dim,
            });
        }
        if body.embeddings.len() != texts.len() {
            return Err(self.transport(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                body.embeddings.len()
            )));
        }
        Ok(body.embeddings)
    }
}

/// In-memory map from text hash to vector, shared between readers.
///
/// Writes go through [`EmbeddingCache::insert_all`], which takes the write
/// lock once per batch.
#[derive(Debug)]
pub struct EmbeddingCache {
    dim: usize,
    entries: RwLock<HashMap<u64, Embedding>>,
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    format: String,
    version: u32,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    values: Vec<f64>,
}

impl EmbeddingCache {
    pub fn new(dim: usize) -> Self {
        EmbeddingCache {
            dim,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn key(text: &str) -> u64 {
        fnv1a64(text.as_bytes())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, text: &str) -> Option<Embedding> {
        self.get_key(Self::key(text))
    }

    pub fn get_key(&self, key: u64) -> Option<Embedding> {
        self.entries.read().unwrap().get(&key).cloned()
    }

    pub fn contains(&self, text: &str) -> bool {
        self.entries.read().unwrap().contains_key(&Self::key(text))
    }

    pub fn insert(&self, text: &str, vector: Embedding) -> Result<()> {
        self.insert_all(vec![(Self::key(text), vector)])
    }

    /// Stores every entry or none of them.
    pub fn insert_all(&self, items: Vec<(u64, Embedding)>) -> Result<()> {
        if let Some((_, bad)) = items.iter().find(|(_, v)| v.dim() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: bad.dim(),
            });
        }
        self.entries.write().unwrap().extend(items);
        Ok(())
    }

    /// Keys in ascending order.
    pub fn keys(&self) -> Vec<u64> {
        let mut keys: Vec<u64> = self.entries.read().unwrap().keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    /// Writes the cache as JSONL via a temporary file renamed into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("jsonl.tmp");
        let write = || -> std::io::Result<()> {
            let mut out = BufWriter::new(File::create(&tmp)?);
            let header = CacheHeader {
                format: CACHE_FORMAT.into(),
                version: CACHE_VERSION,
                dim: self.dim,
            };
            serde_json::to_writer(&mut out, &header)?;
            out.write_all(b"\n")?;
            let entries = self.entries.read().unwrap();
            let mut keys: Vec<&u64> = entries.keys().collect();
            keys.sort_unstable();
            for key in keys {
                let line = CacheLine {
                    key: format!("{key:016x}"),
                    values: entries[key].values().to_vec(),
                };
                serde_json::to_writer(&mut out, &line)?;
                out.write_all(b"\n")?;
            }
            out.into_inner()?.sync_all()
        };
        write().map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
    }

    /// Loads a cache file, checking its header width against `expected_dim`.
    pub fn load(path: &Path, expected_dim: usize) -> Result<Self> {
        let file =
            File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let mut lines = BufReader::new(file).lines();

        let header_line = match lines.next() {
            Some(line) => line.map_err(|e| Error::parse(path, 1, e))?,
            None => return Err(Error::parse(path, 1, "missing cache header")),
        };
        let header: CacheHeader =
            serde_json::from_str(&header_line).map_err(|e| Error::parse(path, 1, e))?;
        if header.format != CACHE_FORMAT || header.version != CACHE_VERSION {
            return Err(Error::parse(
                path,
                1,
                format!(
                    "unsupported cache format {:?} version {}",
                    header.format, header.version
                ),
            ));
        }
        if header.dim != expected_dim {
            return Err(Error::DimensionMismatch {
                expected: expected_dim,
                actual: header.dim,
            });
        }

        let mut entries = HashMap::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::parse(path, lineno, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CacheLine =
                serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e))?;
            if rec.key.len() != 16 {
                return Err(Error::parse(path, lineno, "key must be 16 hex chars"));
            }
            let key = u64::from_str_radix(&rec.key, 16)
                .map_err(|e| Error::parse(path, lineno, format!("bad key: {e}")))?;
            if rec.values.len() != header.dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {} values, got {}", header.dim, rec.values.len()),
                ));
            }
            let vector = Embedding::new(rec.values).map_err(|e| Error::parse(path, lineno, e))?;
            entries.insert(key, vector);
        }
        Ok(EmbeddingCache {
            dim: header.dim,
            entries: RwLock::new(entries),
        })
    }

    /// Loads `path` if it exists, otherwise starts empty.
    pub fn load_or_new(path: &Path, dim: usize) -> Result<Self> {
        if path.exists() {
            Self::load(path, dim)
        } else {
            Ok(Self::new(dim))
        }
    }
}

/// Embeds `texts` in order, serving cache hits locally and fetching all
/// misses from `provider` in one call. A failed batch leaves the cache
/// untouched.
pub fn embed_batch<S: AsRef<str>>(
    texts: &[S],
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
) -> Result<Vec<Embedding>> {
    if provider.dim() != cache.dim() {
        return Err(Error::DimensionMismatch {
            expected: cache.dim(),
            actual: provider.dim(),
        });
    }
    let keys: Vec<u64> = texts
        .iter()
        .map(|t| EmbeddingCache::key(t.as_ref()))
        .collect();

    let mut found: HashMap<u64, Embedding> = HashMap::new();
    let mut misses: Vec<&str> = Vec::new();
    let mut miss_keys: Vec<u64> = Vec::new();
    for (text, &key) in texts.iter().zip(&keys) {
        if found.contains_key(&key) || miss_keys.contains(&key) {
            continue;
        }
        match cache.get_key(key) {
            Some(v) => {
                found.insert(key, v);
            }
            None => {
                misses.push(text.as_ref());
                miss_keys.push(key);
            }
        }
    }

    if !misses.is_empty() {
        let raw = provider.encode(&misses)?;
        if raw.len() != misses.len() {
            return Err(Error::Validation(format!(
                "provider returned {} vectors for {} texts",
                raw.len(),
                misses.len()
            )));
        }
        let mut fresh = Vec::with_capacity(raw.len());
        for (key, values) in miss_keys.into_iter().zip(raw) {
            if values.len() != provider.dim() {
                return Err(Error::DimensionMismatch {
                    expected: provider.dim(),
                    actual: values.len(),
                });
            }
            fresh.push((key, Embedding::new(values)?));
        }
        found.extend(fresh.iter().cloned());
        cache.insert_all(fresh)?;
    }

    Ok(keys.iter().map(|k| found[k].clone()).collect())
}
