//! Reading and writing task files in canonical form.
//!
//! Run with `cargo run --example task_files`.

use std::path::Path;

use arcforge::task::{parse_plain_arc, parse_task_file, serialize_task_file};

fn main() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline/golden/tasks/spinning_fan-v1.json");
    let bytes = std::fs::read(&golden).expect("fixture task file");
    let task = parse_task_file(&bytes).expect("valid task");
    println!("{}: {} train + {} test pairs", task.id, task.pairs.train.len(), task.pairs.test.len());
    println!("analogy:  {}", task.analogy);
    println!("concepts: {}", task.sketch.concepts.join(", "));
    if let Some(m) = task.metrics {
        println!("metrics:  {m}");
    }
    println!("pipeline: {}", task.provenance.pipeline_version.as_str());
    // Serialization is canonical, so a round trip reproduces the file.
    println!("byte-identical round trip: {}", serialize_task_file(&task) == bytes);

    // Schema errors carry the JSON path of the offending value.
    let broken = br#"{"train": [{"input": [[1, 2], [3]], "output": [[1]]}], "test": []}"#;
    match parse_plain_arc(broken) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("\nrejected: {e}"),
    }
}
