//! The validation gate over the candidate fixtures.
//!
//! Run with `cargo run --example quality_gate`.

use std::path::Path;

use arcforge::exec::RunnerConfig;
use arcforge::task::Candidate;
use arcforge::validate::{validate_batch, ValidationConfig, VerdictTally};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/candidates");
    let mut paths: Vec<_> = std::fs::read_dir(&dir).expect("fixture dir").map(|e| e.unwrap().path()).collect();
    paths.sort();
    let candidates: Vec<Candidate> =
        paths.iter().map(|p| Candidate::parse(&std::fs::read(p).unwrap()).expect("valid candidate")).collect();

    let cfg = ValidationConfig { rng_seed: 7, ..ValidationConfig::default() }.with_budget_secs(2);
    let results = validate_batch(&candidates, &RunnerConfig::Fake, &cfg, 4, None);
    let tally = VerdictTally::new();
    for (c, r) in candidates.iter().zip(&results) {
        let v = r.verdict();
        tally.record(v.outcome);
        println!("{:<28} {:<24} {}", c.id, v.outcome.as_str(), v.detail);
    }
    println!("\n{}", serde_json::to_string_pretty(&tally.to_json()).unwrap());
}
