// Trains the similarity network on the demo question pairs and reports the
// per-epoch history. A small architecture keeps the run short; the default
// is `SimilarityModel::new(768, &DEFAULT_HIDDEN, DEFAULT_DROPOUT, seed)`.

use std::path::Path;

use tinysearch::io::load_pairs;
use tinysearch::simnet::{eval_accuracy, train, PairExample};
use tinysearch::{embed_batch, EmbeddingCache, ProviderConfig, SimilarityModel, TrainConfig};

const DIM: usize = 128;

pub fn run_example() -> tinysearch::Result<String> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let pairs = load_pairs(&data.join("demo_pairs.jsonl"))?;
    let provider = ProviderConfig::mock(DIM).build()?;
    let cache = EmbeddingCache::new(DIM);

    let texts: Vec<&str> = pairs
        .iter()
        .flat_map(|p| [p.text_a.as_str(), p.text_b.as_str()])
        .collect();
    let vectors = embed_batch(&texts, provider.as_ref(), &cache)?;
    let examples = pairs
        .iter()
        .zip(vectors.chunks(2))
        .map(|(p, v)| PairExample::new(&v[0], &v[1], p.label))
        .collect::<tinysearch::Result<Vec<_>>>()?;

    let model = SimilarityModel::new(DIM, &[64, 32, 16], 0.5, 7)?;
    let config = TrainConfig {
        epochs: 150,
        batch_size: 16,
        shuffle_seed: 7,
        ..TrainConfig::default()
    };
    let (trained, history) = train(model, &examples, &config)?;

    let mut out = String::new();
    for e in history.epochs.iter().step_by(30) {
        out.push_str(&format!(
            "epoch {:>2}: train_loss={:.4} val_loss={:.4} val_acc={:.4}\n",
            e.epoch, e.train_loss, e.val_loss, e.val_accuracy
        ));
    }
    let acc = eval_accuracy(&trained, &examples, 0.5)?;
    out.push_str(&format!("accuracy on all {} pairs: {acc:.4}\n", examples.len()));
    Ok(out)
}

fn main() {
    match run_example() {
        Ok(report) => print!("{report}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
