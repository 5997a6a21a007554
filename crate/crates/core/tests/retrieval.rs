mod common;

use std::collections::BTreeMap;

use arcforge::retrieval::{
    build_index, build_object_index, cosine, lookup_object_seed, CachedEmbedder, Embedder, EmbeddingVector,
    HashingEmbedder, RetrievalError, VectorIndex,
};
use arcforge::task::{CandidateProgram, ObjectKind, ObjectSeed, SeedExample};
use common::retrieval_oracle::{index_case, index_top_k, nonzero, scan};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn top_k_equals_exhaustive_scan((vectors, query, k) in index_case()) {
        prop_assert_eq!(index_top_k(&vectors, &query, k), scan(&vectors, &query, k));
    }
}

proptest! {
    #[test]
    fn cosine_is_symmetric_and_scale_invariant(
        (u, v) in (1usize..=64).prop_flat_map(|d| (nonzero(d), nonzero(d))),
        a in 0.01f64..100.0,
    ) {
        let e = |x: &[f64]| EmbeddingVector::new(x.to_vec(), "m");
        let uv = cosine(&e(&u), &e(&v)).unwrap();
        prop_assert!((uv - cosine(&e(&v), &e(&u)).unwrap()).abs() <= 1e-12);
        let scaled: Vec<f64> = u.iter().map(|x| a * x).collect();
        prop_assert!((uv - cosine(&e(&scaled), &e(&v)).unwrap()).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&uv));
    }
}

fn seed(name: &str, description: &str) -> SeedExample {
    SeedExample {
        name: name.into(),
        concepts: vec!["test".into()],
        description: description.into(),
        source: CandidateProgram::default(),
        embedding: None,
    }
}

fn object(name: &str, kind: ObjectKind) -> ObjectSeed {
    ObjectSeed {
        name: name.into(),
        kind,
        generator_source: format!("def generate_{name}():\n    return [[1]]\n"),
        pixel_meaning: BTreeMap::new(),
        parameter_desc: BTreeMap::new(),
        embedding: None,
    }
}

#[test]
fn duplicate_descriptions_collapse() {
    let e = HashingEmbedder::default();
    let idx = build_index(vec![seed("a", "same text"), seed("b", "same text"), seed("c", "other")], &e).unwrap();
    assert_eq!(idx.len(), 2);
    assert_eq!(idx.entries()[0].key, "a");
    assert!(idx.entries()[0].payload.embedding.is_some());
}

#[test]
fn one_hundred_sixty_seeds_index_at_most_160() {
    let seeds: Vec<_> = (0..160).map(|i| seed(&format!("s{i:03}"), &format!("task number {}", i % 150))).collect();
    let idx = build_index(seeds, &HashingEmbedder::default()).unwrap();
    assert_eq!(idx.len(), 150);
}

#[test]
fn k_beyond_the_index_returns_everything_sorted() {
    let e = HashingEmbedder::default();
    let idx = build_index(vec![seed("a", "red square"), seed("b", "blue circle"), seed("c", "red squares")], &e).unwrap();
    let hits = arcforge::retrieval::query(&idx, "red square", &e, 10).unwrap();
    assert_eq!(hits.len(), 3);
    assert_eq!(hits[0].entry.key, "a");
    assert!(hits.windows(2).all(|w| w[0].similarity >= w[1].similarity));
}

#[test]
fn object_lookup_by_name() {
    let e = HashingEmbedder::default();
    let listing = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/metrics_corpus/01_amplifier_seed.py")).unwrap();
    let mut amp = object("amplifier", ObjectKind::Explicit);
    amp.generator_source = listing;
    let seeds = vec![
        object("snowflake", ObjectKind::Explicit),
        amp,
        object("ground", ObjectKind::Explicit),
        object("tree", ObjectKind::Explicit),
        object("ripple", ObjectKind::Implicit),
    ];
    let idx = build_object_index(seeds, &e).unwrap();
    assert_eq!(idx.len(), 4, "implicit objects never enter the store");

    let (hit, sim) = lookup_object_seed(&idx, "amp", &e).unwrap();
    assert_eq!(hit.name, "amplifier");
    assert!(hit.generator_source.contains("def generate_amplifier"));
    let vectors: Vec<Vec<f64>> = idx.entries().iter().map(|en| en.vector.clone()).collect();
    assert_eq!(scan(&vectors, &e.embed_one("amp").unwrap(), 1), vec![1]);
    assert!(sim > 0.0);

    let (exact, sim) = lookup_object_seed(&idx, "ground", &e).unwrap();
    assert_eq!(exact.name, "ground");
    assert!((sim - 1.0).abs() < 1e-9);

    let empty = VectorIndex::<ObjectSeed>::new(e.model_id());
    assert_eq!(lookup_object_seed(&empty, "amp", &e).unwrap_err(), RetrievalError::EmptyIndex);
}

#[test]
fn cache_round_trip_is_bit_identical_and_warm_rebuild_is_free() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("embeddings.jsonl");
    let texts: Vec<String> = ["amplifier", "snowflake", "ground", "amplifier"].iter().map(|s| s.to_string()).collect();

    let cold = CachedEmbedder::open(HashingEmbedder::new(48), &path).unwrap();
    let first = cold.embed(&texts).unwrap();
    assert_eq!(cold.inner_calls(), 1);
    assert_eq!(cold.len(), 3);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);

    // Non-integer components exercise float round-tripping through JSON.
    let scaled: Vec<String> = vec!["x".into()];
    struct Thirds;
    impl Embedder for Thirds {
        fn model_id(&self) -> &str {
            "thirds"
        }
        fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
            Ok(texts.iter().map(|_| vec![1.0 / 3.0, std::f64::consts::PI, -2.0e-308, 1e300]).collect())
        }
    }
    let thirds = CachedEmbedder::open(Thirds, &path).unwrap();
    let want = thirds.embed(&scaled).unwrap();
    let reread = CachedEmbedder::open(Thirds, &path).unwrap();
    let got = reread.embed(&scaled).unwrap();
    assert_eq!(reread.inner_calls(), 0);
    assert_eq!(want[0].iter().map(|x| x.to_bits()).collect::<Vec<_>>(), got[0].iter().map(|x| x.to_bits()).collect::<Vec<_>>());

    let warm = CachedEmbedder::open(HashingEmbedder::new(48), &path).unwrap();
    let idx = build_index(vec![seed("a", "amplifier"), seed("b", "snowflake"), seed("c", "ground")], &warm).unwrap();
    assert_eq!(warm.inner_calls(), 0);
    assert_eq!(idx.entries()[0].vector, first[0]);
    assert_eq!(warm.embed(&texts).unwrap(), first);
}
