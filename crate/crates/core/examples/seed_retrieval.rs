//! Indexing seed examples and retrieving the closest ones for a sketch.
//!
//! Run with `cargo run --example seed_retrieval -- "blocks fall and stack"`.

use std::path::Path;

use arcforge::retrieval::{build_index, query, HashingEmbedder};
use arcforge::task::SeedExample;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/seeds");
    let seeds = SeedExample::load_dir(&dir).expect("seed directory");
    let embedder = HashingEmbedder::new(256);
    let index = build_index(seeds, &embedder).expect("index builds");
    println!("{} seeds indexed", index.len());

    let text = std::env::args().nth(1).unwrap_or_else(|| "pixels fall down until they land on something".into());
    for hit in query(&index, &text, &embedder, 3).expect("query") {
        println!("{:.4}  {:<16} {}", hit.similarity, hit.entry.key, hit.entry.payload.description);
    }
}
