//! The `arcforge` binary: exit codes, JSON output and run manifests.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;
use std::time::{Duration, Instant};

use arcforge::analytics::{classify_types, judge_similarity};
use arcforge::llm::{ChatRequest, FnProvider, Gateway, GatewayError, RecordingProvider, RetryPolicy, Stage, StageConfig};
use arcforge::pipeline::{PromptSet, StageCaller};
use serde_json::Value;

fn arcforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arcforge"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Records one reply per request into `dir` the way the CLI will ask.
fn record(dir: &Path, reply: &'static str, f: impl FnOnce(&StageCaller<'_>)) {
    let provider = FnProvider::new(move |_: &ChatRequest<'_>| -> Result<String, GatewayError> { Ok(reply.into()) });
    let recorder = RecordingProvider::new(Arc::new(provider), dir).unwrap();
    let gateway = Gateway::with_limits(Arc::new(recorder), RetryPolicy::none(), 1);
    let prompts = PromptSet::builtin();
    let configs: BTreeMap<Stage, StageConfig> = Stage::ALL.into_iter().map(|s| (s, StageConfig::default_for(s))).collect();
    f(&StageCaller { gateway: &gateway, prompts: &prompts, configs: &configs, reprompt_budget: 0 });
}

#[test]
fn help_and_usage_errors() {
    let help = arcforge(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["abstract", "sketch", "synthesize", "validate", "metrics", "stats", "eval-analogy", "export"] {
        assert!(text.contains(sub), "help lists {sub}");
    }
    assert!(!text.contains("fake-runner"));
    assert_eq!(arcforge(&["validate", "--no-such-flag", "x.json"]).status.code(), Some(2));
    let unknown = arcforge(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(arcforge(&["validate", "fixtures/does-not-exist.json"]).status.code(), Some(2));
}

#[test]
fn validate_loop_times_out() {
    let start = Instant::now();
    let out = arcforge(&["validate", "--budget-secs", "2", "fixtures/loop.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["outcome"], "timeout");
    assert!(start.elapsed() < Duration::from_secs(6));
}

#[test]
fn validate_passing_candidate_writes_task() {
    let dir = tempfile::tempdir().unwrap();
    let task = dir.path().join("task.json");
    let out = arcforge(&["validate", "fixtures/candidates/02_rotate_90.json", "--out", s(&task)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["outcome"], "pass");
    let metrics = arcforge(&["metrics", s(&task)]);
    assert_eq!(stdout_json(&metrics), v["metrics"]);
}

#[test]
fn synthesize_replay_matches_golden_and_reproduces_digests() {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = arcforge(&[
            "--config", "fixtures/pipeline/arcforge.toml", "synthesize", "--sources", "fixtures/pipeline/sources",
            "--out", s(&out_dir), "--replay", "fixtures/pipeline/transcripts", "--workers", if run == "a" { "1" } else { "3" },
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout_json(&out)["fidelity"]["sketch"]["rate"], "66.67%");
        let manifest: Value = serde_json::from_slice(&std::fs::read(out_dir.join("run.json")).unwrap()).unwrap();
        assert_eq!(manifest["fidelity"]["sketch"]["rate"], "66.67%");
        assert_eq!(manifest["rng_seed"], 7);
        assert!(manifest["command_line"].as_array().unwrap().iter().any(|a| a == "--replay"));
        std::fs::remove_file(out_dir.join("run.json")).unwrap();
        common::pipeline::compare_trees(&common::pipeline::golden_dir(), &out_dir).unwrap();
        digests.push(manifest["outputs"].clone());
    }
    assert_eq!(digests[0], digests[1]);
    assert_eq!(digests[0].as_object().unwrap().len(), 8);
}

#[test]
fn abstract_then_sketch_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "fixtures/pipeline/arcforge.toml";
    let out = arcforge(&["--config", cfg, "abstract", "--sources", "fixtures/pipeline/sources", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("abstractions/snowfall.json").is_file());
    let out = arcforge(&["--config", cfg, "sketch", "--abstractions", s(dir.path()), "--out", s(dir.path())]);
    // The windmill sketch reply has no headers.
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["failed"], 1);
    let snow = std::fs::read_to_string(dir.path().join("sketches/snowfall.txt")).unwrap();
    let golden: Value =
        serde_json::from_slice(&std::fs::read(common::pipeline::golden_dir().join("tasks/snowfall-v1.json")).unwrap()).unwrap();
    assert!(snow.contains(golden["sketch"]["concepts"][0].as_str().unwrap()));
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert!(manifest["outputs"]["sketches/snowfall.txt"].is_string());
}

#[test]
fn export_checks_digests() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    copy_dir(&common::pipeline::golden_dir(), &run);
    let plain = dir.path().join("plain");
    let out = arcforge(&["export", s(&run), "--out", s(&plain)]);
    assert_eq!(out.status.code(), Some(0));
    let exported: Value = serde_json::from_slice(&std::fs::read(plain.join("snowfall-v1.json")).unwrap()).unwrap();
    assert_eq!(exported.as_object().unwrap().keys().collect::<Vec<_>>(), ["test", "train"]);

    let task = run.join("tasks/spinning_fan-v1.json");
    let mut bytes = std::fs::read(&task).unwrap();
    bytes.push(b' ');
    std::fs::write(&task, bytes).unwrap();
    let out = arcforge(&["export", s(&run), "--out", s(&plain)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["digest_mismatches"][0], "tasks/spinning_fan-v1.json");
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        let dest = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_dir(&p, &dest);
        } else {
            std::fs::copy(&p, &dest).unwrap();
        }
    }
}

#[test]
fn stats_report_and_histogram() {
    let out = arcforge(&["stats", "tests/data/stats_dataset", "--sample-std"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["estimator"], "sample");
    assert_eq!(v["pair_count"], 8);

    let dir = tempfile::tempdir().unwrap();
    let transcripts = dir.path().join("transcripts");
    let tasks = arcforge::analytics::load_dataset(&common::pipeline::golden_dir().join("tasks")).unwrap();
    record(&transcripts, r#"{"types": ["Falling & Stacking Blocks", "Not A Type"]}"#, |caller| {
        for t in &tasks {
            classify_types(t.keywords(), caller).unwrap();
        }
    });
    let csv = dir.path().join("types.csv");
    let golden = common::pipeline::golden_dir().join("tasks");
    let out = arcforge(&["stats", s(&golden), "--histogram", s(&csv), "--replay", s(&transcripts)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["types"]["Falling & Stacking Blocks"], 2);
    let csv = std::fs::read_to_string(csv).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.contains("\"Falling & Stacking Blocks\",2"));
}

#[test]
fn eval_analogy_embedding_and_judge() {
    let dir = tempfile::tempdir().unwrap();
    let cands = dir.path().join("cands.txt");
    let truth = dir.path().join("truth.txt");
    std::fs::write(&cands, "water fills a glass\nsnow piles up\n").unwrap();
    std::fs::write(&truth, "water fills a glass\na wheel turns\n").unwrap();
    let transcripts = dir.path().join("transcripts");
    record(&transcripts, "0.137", |caller| {
        judge_similarity("water fills a glass", "water fills a glass", caller).unwrap();
        judge_similarity("snow piles up", "a wheel turns", caller).unwrap();
    });
    let out = arcforge(&[
        "eval-analogy", "--candidates", s(&cands), "--ground-truth", s(&truth), "--judge", "--replay", s(&transcripts),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["pairs"][0]["embedding"], 1.0);
    assert_eq!(v["pairs"][1]["judge"], 0.137);
    assert_eq!(v["mean_judge"], 0.137);
    std::fs::write(&truth, "only one line\n").unwrap();
    assert_eq!(arcforge(&["eval-analogy", "--candidates", s(&cands), "--ground-truth", s(&truth)]).status.code(), Some(2));
}

#[test]
fn metrics_of_a_seed_program() {
    let out = arcforge(&["metrics", "fixtures/seeds/falling_sand.py"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    for key in ["loc", "cyclomatic", "nesting_depth", "unique_ops"] {
        assert!(v[key].is_u64(), "{key}");
    }
}
