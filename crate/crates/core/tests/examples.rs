//! Runs every example under `examples/` as a test.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            let summary = $name::run_example().unwrap();
            assert!(!summary.is_empty());
        }
    };
}

example!(embed_and_cache);
example!(cosine_search);
example!(train_similarity);
example!(learned_search);
example!(evaluate_queries);
example!(serve_api);
