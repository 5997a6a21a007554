//! Lexical complexity metrics of a generated program.
//!
//! Run with `cargo run --example code_metrics [file.py]`.

use std::path::PathBuf;

use arcforge::metrics::{complexity_report, tokenize, ComplexityReport, TokenKind};
use arcforge::task::CandidateProgram;

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/seeds/falling_sand.py")
    });
    let source = std::fs::read_to_string(&path).expect("readable source");
    let report = ComplexityReport::of_source(&source).expect("tokenizable source");
    println!("{}: {report}", path.display());

    let operators: Vec<String> = tokenize(&source)
        .expect("tokenizable source")
        .into_iter()
        .filter(|t| t.kind == TokenKind::Operator)
        .map(|t| t.text)
        .collect();
    println!("operator tokens: {}", operators.join(" "));

    // Lines of the shared library prelude do not count toward the metrics.
    let program = CandidateProgram {
        library_prelude: "from common import *".into(),
        total_source: source,
        ..Default::default()
    };
    println!("without prelude: {}", complexity_report(&program).expect("program defines main"));
}
