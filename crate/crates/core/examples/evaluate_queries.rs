// Scores cosine retrieval on the demo gold queries at k = 5.

use std::path::Path;

use tinysearch::index::{Scorer, SearchIndex};
use tinysearch::io::{load_corpus, load_gold};
use tinysearch::{evaluate_run, EmbeddingCache, ProviderConfig};

pub fn run_example() -> tinysearch::Result<String> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let provider = ProviderConfig::mock(768).build()?;
    let cache = EmbeddingCache::new(768);
    let index = SearchIndex::build(load_corpus(&data.join("demo_corpus.jsonl"))?, provider.as_ref(), &cache)?;
    let gold = load_gold(&data.join("demo_gold.jsonl"))?;

    let report = evaluate_run(&index, provider.as_ref(), &cache, &gold, Scorer::Cosine, 5)?;
    for q in &report.queries {
        assert_eq!(q.confusion.total(), index.len());
    }
    Ok(report.render_table())
}

fn main() {
    match run_example() {
        Ok(table) => print!("{table}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
