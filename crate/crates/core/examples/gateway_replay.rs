//! Recording model calls to transcripts and replaying them offline.
//!
//! Run with `cargo run --example gateway_replay`.

use std::sync::Arc;

use arcforge::llm::{
    extract_json, ChatRequest, FnProvider, Gateway, GatewayError, RecordingProvider, ReplySchema, RetryPolicy, Stage,
    StageConfig,
};

fn main() {
    let dir = tempfile_dir();
    // A scripted provider stands in for the live API.
    let scripted = FnProvider::new(|req: &ChatRequest<'_>| -> Result<String, GatewayError> {
        Ok(format!(
            "Sure.\n```json\n{{\"concepts\": [\"echo\"], \"description\": \"{} chars of prompt\"}}\n```",
            req.user.len()
        ))
    });
    let recorder = RecordingProvider::new(Arc::new(scripted), &dir).expect("transcript dir");
    let live = Gateway::with_limits(Arc::new(recorder), RetryPolicy::none(), 2);
    let cfg = StageConfig::default_for(Stage::Step2);
    let first = live.chat(&cfg, "system text", "a snowflake falls", &[]).unwrap();

    // Same request, answered from disk.
    let replay = Gateway::replay(&dir);
    let again = replay.chat(&cfg, "system text", "a snowflake falls", &[]).unwrap();
    println!("replayed identically: {}", first == again);
    println!("extracted: {}", extract_json(&again, ReplySchema::Sketch).unwrap());
    println!("unrecorded request: {}", replay.chat(&cfg, "system text", "a leaf falls", &[]).unwrap_err());
    let _ = std::fs::remove_dir_all(dir);
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("arcforge-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
