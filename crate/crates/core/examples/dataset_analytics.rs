//! Dataset statistics, analogy similarity and judge-score parsing.
//!
//! Run with `cargo run --example dataset_analytics [dataset-dir]`.

use std::path::PathBuf;

use arcforge::analytics::{
    dataset_stats, embed_similarity, extract_score, load_dataset, parse_type_labels, StdEstimator, TypeHistogram,
};
use arcforge::retrieval::HashingEmbedder;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/stats_dataset"));
    let tasks = load_dataset(&dir).expect("dataset directory");
    for estimator in [StdEstimator::Population, StdEstimator::Sample] {
        let s = dataset_stats(tasks.iter().map(|t| t.pairs()), estimator).expect("non-empty dataset");
        println!(
            "{estimator:?}: {} tasks, input cells {:.2} ± {:.2}, colors per task {:.2} ± {:.2}",
            s.task_count, s.input_cells.mean, s.input_cells.std, s.colors_per_task.mean, s.colors_per_task.std
        );
    }

    let e = HashingEmbedder::new(256);
    let pairs = [("water fills a glass", "water fills a glass"), ("water fills a glass", "a tank slowly floods")];
    for (a, b) in pairs {
        println!("embed({a:?}, {b:?}) = {:.4}", embed_similarity(a, b, &e).unwrap());
    }

    for reply in ["Both involve rising liquid.\n0.82", "Score: 0.4/1", "About 75% aligned.", "no idea"] {
        println!("judge reply {reply:?} -> {:?}", extract_score(reply));
    }

    let labels = parse_type_labels(r#"{"types": ["Gravity & Liquid Flow", "Teleportation"]}"#).unwrap();
    let mut histogram = TypeHistogram::default();
    histogram.add(&labels);
    print!("\n{}", histogram.to_csv().lines().filter(|l| !l.ends_with(",0")).collect::<Vec<_>>().join("\n"));
    println!();
}
