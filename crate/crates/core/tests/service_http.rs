mod support;

use std::sync::Arc;
use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use serde_json::{json, Value};
use tower::ServiceExt;

use tinysearch::embedder::{MockProvider, RemoteProvider};
use tinysearch::index::{Scorer, SearchIndex};
use tinysearch::io::load_corpus;
use tinysearch::service::{router, AppState, SearchResponse, Snapshot};
use tinysearch::simnet::init_model;
use tinysearch::{embed_batch, EmbeddingCache, EmbeddingProvider};

fn demo_state(with_model: bool) -> AppState {
    let provider: Arc<dyn EmbeddingProvider> = Arc::new(MockProvider::new(768));
    let cache = Arc::new(EmbeddingCache::new(768));
    let docs = load_corpus(&support::data_dir().join("demo_corpus.jsonl")).unwrap();
    let index = SearchIndex::build(docs, provider.as_ref(), &cache).unwrap();
    let model = with_model.then(|| init_model(7));
    AppState::new(Snapshot { index, model }, provider, cache)
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

fn ids(v: &Value) -> Vec<String> {
    v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["doc_id"].as_str().unwrap().to_string())
        .collect()
}

#[tokio::test]
async fn search_returns_top_five_in_library_order() {
    let state = Arc::new(demo_state(true));
    let app = router(state.clone(), None);
    let (status, body) = call(
        &app,
        "POST",
        "/api/search",
        Some(json!({"query": "deep learning faculty", "k": 5})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["scorer"], "learned");
    let scores: Vec<f64> = body["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["score"].as_f64().unwrap())
        .collect();
    assert_eq!(scores.len(), 5);
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    // same ordering as a direct library call
    let snap = state.snapshot();
    let q = embed_batch(&["deep learning faculty"], state.provider(), state.cache()).unwrap();
    let direct: Vec<String> = snap
        .index
        .rank(&q[0], Scorer::Learned(snap.model.as_ref().unwrap()), 5)
        .unwrap()
        .into_iter()
        .map(|r| r.doc_id)
        .collect();
    assert_eq!(ids(&body), direct);
    let parsed: SearchResponse = serde_json::from_value(body).unwrap();
    assert_eq!(parsed.results[0].rank, 1);
}

#[tokio::test]
async fn k_larger_than_corpus_returns_everything() {
    let app = router(Arc::new(demo_state(true)), None);
    let (status, body) = call(&app, "POST", "/api/search", Some(json!({"query": "x", "k": 20}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["results"].as_array().unwrap().len(), 14);
}

#[tokio::test]
async fn bad_requests_are_400_and_leave_state_alone() {
    let app = router(Arc::new(demo_state(true)), None);
    let good = json!({"query": "football in usa", "scorer": "cosine"});
    let (_, before) = call(&app, "POST", "/api/search", Some(good.clone())).await;

    for bad in [
        json!({"query": ""}),
        json!({"query": "x", "k": 0}),
        json!({"query": "x", "k": 101}),
        json!({"query": "x", "scorer": "bm25"}),
        json!({"k": 5}),
    ] {
        let (status, body) = call(&app, "POST", "/api/search", Some(bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert!(body["error"].is_string());
    }
    let req = Request::post("/api/search").body(Body::from("{nope")).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);

    let (status, after) = call(&app, "POST", "/api/search", Some(good)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ids(&before), ids(&after));
    assert_eq!(before["results"], after["results"]);
}

#[tokio::test]
async fn learned_without_model_is_conflict() {
    let app = router(Arc::new(demo_state(false)), None);
    let (status, _) = call(&app, "POST", "/api/search", Some(json!({"query": "books"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, health) = call(&app, "GET", "/api/health", None).await;
    assert_eq!(health["model_loaded"], false);
}

#[tokio::test]
async fn documents_and_health() {
    let app = router(Arc::new(demo_state(true)), None);
    let (status, docs) = call(&app, "GET", "/api/documents", None).await;
    assert_eq!(status, StatusCode::OK);
    let list = docs.as_array().unwrap();
    assert_eq!(list.len(), 14);
    assert_eq!(list[0]["doc_id"], "d01");
    assert!(list[0].get("body").is_none());
    let (_, again) = call(&app, "GET", "/api/documents", None).await;
    assert_eq!(docs, again);

    let (status, health) = call(&app, "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        health,
        json!({"status": "ok", "corpus_size": 14, "model_loaded": true, "encoder": "mock"})
    );
}

#[tokio::test]
async fn empty_corpus_lists_nothing() {
    let provider: Arc<dyn EmbeddingProvider> = Arc::new(MockProvider::new(768));
    let cache = Arc::new(EmbeddingCache::new(768));
    let index = SearchIndex::from_parts(vec![], vec![], 768).unwrap();
    let state = AppState::new(Snapshot { index, model: None }, provider, cache);
    let app = router(Arc::new(state), None);
    let (_, docs) = call(&app, "GET", "/api/documents", None).await;
    assert_eq!(docs, json!([]));
}

#[tokio::test]
async fn concurrent_identical_searches_agree() {
    let app = router(Arc::new(demo_state(true)), None);
    let body = json!({"query": "must read english classic books of all time"});
    let handles: Vec<_> = (0..16)
        .map(|_| {
            let app = app.clone();
            let body = body.clone();
            tokio::spawn(async move { call(&app, "POST", "/api/search", Some(body)).await })
        })
        .collect();
    let mut orders = Vec::new();
    for h in handles {
        let (status, v) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        orders.push(ids(&v));
    }
    assert!(orders.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn root_serves_ui_page() {
    let app = router(Arc::new(demo_state(false)), None);
    let resp = app
        .clone()
        .oneshot(Request::get("/").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    assert!(String::from_utf8_lossy(&bytes).contains("/api/search"));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>custom ui</p>").unwrap();
    let app = router(Arc::new(demo_state(false)), Some(dir.path()));
    let resp = app.oneshot(Request::get("/").body(Body::empty()).unwrap()).await.unwrap();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    assert_eq!(&bytes[..], b"<p>custom ui</p>");
}

#[test]
fn unreachable_encoder_is_bad_gateway() {
    // the blocking client must be created and dropped outside the runtime
    let provider: Arc<dyn EmbeddingProvider> = Arc::new(
        RemoteProvider::new("http://127.0.0.1:9", 768, Duration::from_millis(500)).unwrap(),
    );
    let cache = Arc::new(EmbeddingCache::new(768));
    let index = SearchIndex::from_parts(vec![], vec![], 768).unwrap();
    let state = Arc::new(AppState::new(Snapshot { index, model: None }, provider, cache));
    let rt = tokio::runtime::Runtime::new().unwrap();
    let (status, body) = rt.block_on(async {
        let app = router(state.clone(), None);
        call(&app, "POST", "/api/search", Some(json!({"query": "x", "scorer": "cosine"}))).await
    });
    drop(rt);
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(body["error"].as_str().unwrap().contains("127.0.0.1:9"));
}
