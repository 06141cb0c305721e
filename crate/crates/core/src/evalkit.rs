//! Precision, recall and F1 of a top-k cutoff against gold judgments.
//!
//! The top-k results count as positive predictions. A non-relevant document
//! outside the top-k is a true negative, so the four counts always sum to the
//! corpus size.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::embedder::{embed_batch, EmbeddingCache, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::index::{Scorer, SearchIndex};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldJudgment {
    pub query: String,
    pub relevant_ids: Vec<String>,
}

impl GoldJudgment {
    /// Fails with the first relevant id missing from `index`.
    pub fn validate_against(&self, index: &SearchIndex) -> Result<()> {
        match self.relevant_ids.iter().find(|id| !index.contains(id)) {
            Some(id) => Err(Error::UnknownDocId(id.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Confusion { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion counts for the first `k` of `ranked_ids` against `relevant`,
/// over a corpus of `corpus` ids.
pub fn confusion_at_k<S: AsRef<str>>(
    ranked_ids: &[S],
    relevant: &HashSet<String>,
    corpus: &HashSet<String>,
    k: usize,
) -> Result<Confusion> {
    if k == 0 {
        return Err(Error::Validation("k must be >= 1".into()));
    }
    if let Some(id) = relevant.iter().find(|id| !corpus.contains(*id)) {
        return Err(Error::UnknownDocId(id.clone()));
    }
    if let Some(id) = ranked_ids.iter().find(|id| !corpus.contains(id.as_ref())) {
        return Err(Error::UnknownDocId(id.as_ref().to_string()));
    }
    let mut seen = HashSet::new();
    if let Some(id) = ranked_ids.iter().map(AsRef::as_ref).find(|id| !seen.insert(*id)) {
        return Err(Error::Validation(format!(
            "ranked list repeats `{id}`"
        )));
    }

    let n = corpus.len();
    let cutoff = k.min(ranked_ids.len());
    let tp = ranked_ids[..cutoff]
        .iter()
        .filter(|id| relevant.contains(id.as_ref()))
        .count();
    let fp = cutoff - tp;
    let fn_ = relevant.len() - tp;
    let tn = n - cutoff - fn_;
    Ok(Confusion { tp, fp, tn, fn_ })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1; any empty denominator yields 0.
pub fn prf(c: &Confusion) -> Metrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryReport {
    pub query: String,
    pub retrieved: Vec<String>,
    pub confusion: Confusion,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub queries: Vec<QueryReport>,
    pub macro_avg: Metrics,
}

impl EvalReport {
    pub fn from_queries(queries: Vec<QueryReport>) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::Validation("no queries to evaluate".into()));
        }
        let n = queries.len() as f64;
        let mean = |f: fn(&Metrics) -> f64| queries.iter().map(|q| f(&q.metrics)).sum::<f64>() / n;
        let macro_avg = Metrics {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        };
        Ok(EvalReport { queries, macro_avg })
    }

    /// `{"queries": [...], "macro": {...}}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "queries": self.queries,
            "macro": self.macro_avg,
        })
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let width = self
            .queries
            .iter()
            .map(|q| q.query.chars().count())
            .max()
            .unwrap_or(0)
            .max(5);
        let _ = writeln!(
            out,
            "{:<width$}  {:>3} {:>3} {:>3} {:>3}  {:>9} {:>6} {:>6}",
            "query", "tp", "fp", "tn", "fn", "precision", "recall", "f1"
        );
        for q in &self.queries {
            let c = &q.confusion;
            let _ = writeln!(
                out,
                "{:<width$}  {:>3} {:>3} {:>3} {:>3}  {:>9.4} {:>6.4} {:>6.4}",
                q.query, c.tp, c.fp, c.tn, c.fn_, q.metrics.precision, q.metrics.recall, q.metrics.f1
            );
        }
        let m = &self.macro_avg;
        let _ = writeln!(
            out,
            "{:<width$}  {:>3} {:>3} {:>3} {:>3}  {:>9.4} {:>6.4} {:>6.4}",
            "macro", "", "", "", "", m.precision, m.recall, m.f1
        );
        out
    }
}

/// Embeds each gold query, ranks the index and scores the top `k`.
pub fn evaluate_run(
    index: &SearchIndex,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    queries: &[GoldJudgment],
    scorer: Scorer<'_>,
    k: usize,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::Validation("no queries to evaluate".into()));
    }
    for q in queries {
        q.validate_against(index)?;
    }
    let corpus: HashSet<String> = index.documents().iter().map(|d| d.id.clone()).collect();
    let texts: Vec<&str> = queries.iter().map(|q| q.query.as_str()).collect();
    let vectors = embed_batch(&texts, provider, cache)?;

    let mut reports = Vec::with_capacity(queries.len());
    for (q, vector) in queries.iter().zip(&vectors) {
        let ranked: Vec<String> = index
            .rank(vector, scorer, k)?
            .into_iter()
            .map(|r| r.doc_id)
            .collect();
        let relevant: HashSet<String> = q.relevant_ids.iter().cloned().collect();
        let confusion = confusion_at_k(&ranked, &relevant, &corpus, k)?;
        reports.push(QueryReport {
            query: q.query.clone(),
            retrieved: ranked,
            confusion,
            metrics: prf(&confusion),
        });
    }
    EvalReport::from_queries(reports)
}
