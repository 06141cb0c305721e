// Ranks the demo corpus with a trained similarity network, then saves and
// reloads the model to show the ranking survives a round trip.

use std::path::Path;

use tinysearch::index::{Scorer, SearchIndex};
use tinysearch::io::{load_corpus, load_pairs};
use tinysearch::simnet::{train, PairExample};
use tinysearch::{embed_batch, EmbeddingCache, ProviderConfig, SimilarityModel, TrainConfig};

const DIM: usize = 128;

pub fn run_example() -> tinysearch::Result<String> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let provider = ProviderConfig::mock(DIM).build()?;
    let cache = EmbeddingCache::new(DIM);

    let pairs = load_pairs(&data.join("demo_pairs.jsonl"))?;
    let mut examples = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let v = embed_batch(&[&p.text_a, &p.text_b], provider.as_ref(), &cache)?;
        examples.push(PairExample::new(&v[0], &v[1], p.label)?);
    }
    let config = TrainConfig {
        epochs: 100,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let (model, _) = train(SimilarityModel::new(DIM, &[64, 16], 0.5, 3)?, &examples, &config)?;

    let index = SearchIndex::build(load_corpus(&data.join("demo_corpus.jsonl"))?, provider.as_ref(), &cache)?;
    let query = &embed_batch(&["football in usa"], provider.as_ref(), &cache)?[0];
    let before = index.rank(query, Scorer::Learned(&model), 3)?;

    let path = std::env::temp_dir().join(format!("tinysearch-model-{}.json", std::process::id()));
    model.save(&path)?;
    let reloaded = SimilarityModel::load(&path)?;
    let _ = std::fs::remove_file(&path);
    let after = index.rank(query, Scorer::Learned(&reloaded), 3)?;
    assert_eq!(before, after);

    Ok(before
        .iter()
        .map(|r| format!("{:>2}  {:.4}  {}\n", r.rank, r.score, r.doc_id))
        .collect())
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
