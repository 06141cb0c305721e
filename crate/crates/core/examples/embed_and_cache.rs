// Embeds a few texts through the mock encoder, persists the cache and
// shows that a reload serves the same vectors without re-encoding.

use tinysearch::{embed_batch, hash_embed, EmbeddingCache, ProviderConfig};

pub fn run_example() -> tinysearch::Result<String> {
    let provider = ProviderConfig::mock(64).build()?;
    let cache = EmbeddingCache::new(64);
    let texts = ["deep learning faculty", "football in usa", "deep learning faculty"];
    let vectors = embed_batch(&texts, provider.as_ref(), &cache)?;
    assert_eq!(vectors[0], vectors[2]);
    assert_eq!(vectors[0], hash_embed("Deep  Learning faculty", 64));

    let dir = std::env::temp_dir().join(format!("tinysearch-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| tinysearch::Error::Io {
        context: "creating example dir".into(),
        source: e,
    })?;
    let path = dir.join("cache.jsonl");
    cache.save(&path)?;
    let reloaded = EmbeddingCache::load(&path, 64)?;
    let _ = std::fs::remove_dir_all(&dir);

    let hit = reloaded.get("football in usa").expect("cached");
    assert_eq!(hit, vectors[1]);
    Ok(format!(
        "{} unique texts cached; norm of first vector {:.6}",
        reloaded.len(),
        vectors[0].norm()
    ))
}

fn main() {
    match run_example() {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
