// Starts the HTTP API on an ephemeral port, issues a health check and a
// search over real HTTP, then shuts the server down.

use std::path::Path;
use std::sync::{mpsc, Arc};
use std::thread;

use tinysearch::service::{router, AppState, ServiceConfig};
use tinysearch::{Error, ProviderConfig};

pub fn run_example() -> tinysearch::Result<String> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let config = ServiceConfig {
        listen: "127.0.0.1:0".into(),
        corpus: data.join("demo_corpus.jsonl"),
        model: None,
        encoder: ProviderConfig::mock(768),
        cache: None,
        ui_dir: None,
    };
    let state = Arc::new(AppState::from_config(&config)?);

    let (addr_tx, addr_rx) = mpsc::channel();
    let (stop_tx, stop_rx) = mpsc::channel::<()>();
    let server = thread::spawn(move || -> tinysearch::Result<()> {
        let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Io {
            context: "starting runtime".into(),
            source: e,
        })?;
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind(&config.listen)
                .await
                .map_err(|e| Error::Io {
                    context: "binding".into(),
                    source: e,
                })?;
            let _ = addr_tx.send(listener.local_addr().expect("bound listener"));
            axum::serve(listener, router(state, None))
                .with_graceful_shutdown(async move {
                    let _ = tokio::task::spawn_blocking(move || stop_rx.recv()).await;
                })
                .await
                .map_err(|e| Error::Io {
                    context: "serving".into(),
                    source: e,
                })
        })
    });
    let addr = addr_rx
        .recv()
        .map_err(|_| Error::Config("server exited before binding".into()))?;

    let transport = |e: reqwest::Error| Error::Transport {
        endpoint: addr.to_string(),
        message: e.to_string(),
    };
    let client = reqwest::blocking::Client::new();
    let health: serde_json::Value = client
        .get(format!("http://{addr}/api/health"))
        .send()
        .and_then(|r| r.json())
        .map_err(transport)?;
    let search: serde_json::Value = client
        .post(format!("http://{addr}/api/search"))
        .json(&serde_json::json!({"query": "deep learning faculty", "k": 3, "scorer": "cosine"}))
        .send()
        .and_then(|r| r.json())
        .map_err(transport)?;

    let _ = stop_tx.send(());
    server.join().expect("server thread panicked")?;

    let ids: Vec<&str> = search["results"]
        .as_array()
        .map(|rs| rs.iter().filter_map(|r| r["doc_id"].as_str()).collect())
        .unwrap_or_default();
    Ok(format!("health: {health}\ntop 3: {}\n", ids.join(", ")))
}

fn main() {
    match run_example() {
        Ok(summary) => print!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
