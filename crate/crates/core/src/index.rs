//! Document corpus with precomputed embeddings and top-k ranking.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::embedder::{embed_batch, Embedding, EmbeddingCache, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::simnet::SimilarityModel;

/// Number of results returned when no cutoff is given.
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl Document {
    /// Text handed to the encoder.
    pub fn embedding_text(&self) -> String {
        format!("{} {}", self.title, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedResult {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
}

/// How a query/document pair is scored.
#[derive(Debug, Clone, Copy)]
pub enum Scorer<'a> {
    Learned(&'a SimilarityModel),
    Cosine,
}

impl Scorer<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Scorer::Learned(_) => "learned",
            Scorer::Cosine => "cosine",
        }
    }
}

/// Cosine of the angle between `u` and `v`.
pub fn cosine(u: &Embedding, v: &Embedding) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            actual: v.dim(),
        });
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Documents and their embeddings, index-aligned.
#[derive(Debug, Clone)]
pub struct SearchIndex {
    documents: Vec<Document>,
    embeddings: Vec<Embedding>,
    dim: usize,
}

impl SearchIndex {
    /// Embeds every document's `title + " " + body` and builds the index.
    pub fn build(
        docs: Vec<Document>,
        provider: &dyn EmbeddingProvider,
        cache: &EmbeddingCache,
    ) -> Result<Self> {
        validate_documents(&docs)?;
        let texts: Vec<String> = docs.iter().map(Document::embedding_text).collect();
        let embeddings = embed_batch(&texts, provider, cache)?;
        Self::from_parts(docs, embeddings, provider.dim())
    }

    pub fn from_parts(docs: Vec<Document>, embeddings: Vec<Embedding>, dim: usize) -> Result<Self> {
        validate_documents(&docs)?;
        if docs.len() != embeddings.len() {
            return Err(Error::Validation(format!(
                "{} documents but {} embeddings",
                docs.len(),
                embeddings.len()
            )));
        }
        if let Some(bad) = embeddings.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        Ok(SearchIndex {
            documents: docs,
            embeddings,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.document(id).is_some()
    }

    /// Scores every document against `query` and returns the best
    /// `min(k, N)`, highest score first, ties by ascending id.
    pub fn rank(&self, query: &Embedding, scorer: Scorer<'_>, k: usize) -> Result<Vec<RankedResult>> {
        if k == 0 {
            return Err(Error::Validation("k must be >= 1".into()));
        }
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.dim(),
            });
        }
        if let Scorer::Learned(model) = scorer {
            if model.input_dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: model.input_dim(),
                });
            }
        }

        let mut scored = Vec::with_capacity(self.len());
        for (doc, emb) in self.documents.iter().zip(&self.embeddings) {
            let score = match scorer {
                Scorer::Learned(model) => model.score(query, emb)?,
                Scorer::Cosine => match cosine(query, emb) {
                    Ok(s) => s,
                    Err(Error::ZeroNorm) => 0.0,
                    Err(e) => return Err(e),
                },
            };
            scored.push((doc.id.as_str(), score));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(b.0))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (id, score))| RankedResult {
                doc_id: id.to_string(),
                score,
                rank: i + 1,
            })
            .collect())
    }
}

fn validate_documents(docs: &[Document]) -> Result<()> {
    let mut seen = HashSet::with_capacity(docs.len());
    for doc in docs {
        if doc.id.is_empty() {
            return Err(Error::Validation("document id must be non-empty".into()));
        }
        if doc.body.trim().is_empty() {
            return Err(Error::Validation(format!(
                "document `{}` has an empty body",
                doc.id
            )));
        }
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::DuplicateId(doc.id.clone()));
        }
    }
    Ok(())
}
