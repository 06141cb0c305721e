use proptest::prelude::*;
use tinysearch::index::{cosine, Document, Scorer, SearchIndex};
use tinysearch::{Embedding, SimilarityModel};

fn corpus(vectors: &[Vec<f64>]) -> SearchIndex {
    let docs = (0..vectors.len())
        .map(|i| Document {
            id: format!("doc{i:03}"),
            title: String::new(),
            body: "text".into(),
            url: None,
        })
        .collect();
    let embs = vectors.iter().map(|v| Embedding::new(v.clone()).unwrap()).collect();
    SearchIndex::from_parts(docs, embs, vectors[0].len()).unwrap()
}

/// Brute-force scan: score all, stable sort by (score desc, id asc), no shortcuts.
fn brute_force(vectors: &[Vec<f64>], query: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let dot: f64 = v.iter().zip(query).map(|(a, b)| a * b).sum();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nq = query.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = if nv == 0.0 || nq == 0.0 { 0.0 } else { (dot / (nv * nq)).clamp(-1.0, 1.0) };
            (format!("doc{i:03}"), s)
        })
        .collect();
    all.sort_by(|a, b| a.0.cmp(&b.0));
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    all.truncate(k);
    all
}

fn vectors(max_docs: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..6).prop_flat_map(move |dim| {
        (
            prop::collection::vec(
                // a small integer grid produces exact ties and zero vectors
                prop::collection::vec((-2i32..=2).prop_map(f64::from), dim),
                1..=max_docs,
            ),
            prop::collection::vec((-2i32..=2).prop_map(f64::from), dim),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cosine_rank_equals_brute_force((docs, query) in vectors(100), k in 1usize..12) {
        let idx = corpus(&docs);
        let q = Embedding::new(query.clone()).unwrap();
        let got = idx.rank(&q, Scorer::Cosine, k).unwrap();
        let want = brute_force(&docs, &query, k);
        prop_assert_eq!(got.len(), want.len());
        for (i, (r, (id, s))) in got.iter().zip(&want).enumerate() {
            prop_assert_eq!(r.rank, i + 1);
            prop_assert_eq!(&r.doc_id, id);
            prop_assert!((r.score - s).abs() < 1e-12);
        }
    }

    #[test]
    fn top_k_is_prefix_of_full_ranking((docs, query) in vectors(40)) {
        let idx = corpus(&docs);
        let q = Embedding::new(query).unwrap();
        let full = idx.rank(&q, Scorer::Cosine, docs.len()).unwrap();
        for k in 1..=docs.len() {
            prop_assert_eq!(&idx.rank(&q, Scorer::Cosine, k).unwrap()[..], &full[..k]);
        }
    }

    #[test]
    fn positive_scaling_keeps_cosine_order(
        docs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 8), 1..30),
        query in prop::collection::vec(-1.0f64..1.0, 8),
        factor in 0.5f64..4.0,
    ) {
        // powers of two scale exactly; other factors are checked on rounded scores
        let q = Embedding::new(query).unwrap();
        let base = corpus(&docs);
        let scaled: Vec<Vec<f64>> = docs.iter().map(|v| v.iter().map(|x| x * 2.0).collect()).collect();
        let ids = |idx: &SearchIndex| -> Vec<String> {
            idx.rank(&q, Scorer::Cosine, docs.len()).unwrap().into_iter().map(|r| r.doc_id).collect()
        };
        prop_assert_eq!(ids(&base), ids(&corpus(&scaled)));

        let other: Vec<Vec<f64>> = docs.iter().map(|v| v.iter().map(|x| x * factor).collect()).collect();
        let a = base.rank(&q, Scorer::Cosine, docs.len()).unwrap();
        let b = corpus(&other).rank(&q, Scorer::Cosine, docs.len()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.score - y.score).abs() < 1e-12);
        }
    }

    #[test]
    fn learned_scorer_is_deterministic(
        docs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 1..20),
        query in prop::collection::vec(-1.0f64..1.0, 6),
        seed in any::<u64>(),
    ) {
        let idx = corpus(&docs);
        let model = SimilarityModel::new(6, &[8, 4], 0.5, seed).unwrap();
        let q = Embedding::new(query).unwrap();
        let first = idx.rank(&q, Scorer::Learned(&model), 5).unwrap();
        let second = idx.rank(&q, Scorer::Learned(&model), 5).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert!(first.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn cosine_is_bounded_and_symmetric(
        u in prop::collection::vec(-10.0f64..10.0, 5),
        v in prop::collection::vec(-10.0f64..10.0, 5),
    ) {
        let (u, v) = (Embedding::new(u).unwrap(), Embedding::new(v).unwrap());
        prop_assume!(u.norm() > 0.0 && v.norm() > 0.0);
        let c = cosine(&u, &v).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
        prop_assert_eq!(c, cosine(&v, &u).unwrap());
    }
}
