// Ranks the demo corpus against a query by cosine similarity.

use std::path::Path;

use tinysearch::index::{Scorer, SearchIndex};
use tinysearch::io::load_corpus;
use tinysearch::{embed_batch, EmbeddingCache, ProviderConfig};

pub fn run_example() -> tinysearch::Result<String> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let provider = ProviderConfig::mock(768).build()?;
    let cache = EmbeddingCache::new(768);
    let index = SearchIndex::build(load_corpus(&data.join("demo_corpus.jsonl"))?, provider.as_ref(), &cache)?;

    let query = embed_batch(&["classic english books"], provider.as_ref(), &cache)?;
    let results = index.rank(&query[0], Scorer::Cosine, 5)?;
    let mut out = String::new();
    for r in &results {
        let title = &index.document(&r.doc_id).expect("ranked ids come from the index").title;
        out.push_str(&format!("{:>2}  {:.4}  {}  {}\n", r.rank, r.score, r.doc_id, title));
    }
    Ok(out)
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
