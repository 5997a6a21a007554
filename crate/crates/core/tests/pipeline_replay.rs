//! End-to-end replay of the three-source fixture against golden outputs.

mod common;

use arcforge::llm::Gateway;
use arcforge::pipeline::{SourceOrigin, FIDELITY_FILE};
use arcforge::task::parse_task_file;
use arcforge::validate::{FidelityStage, FilterOutcome, Rate};
use common::pipeline::{bless, compare_trees, golden_dir, run_into, transcripts_dir};

fn replay(workers: usize) -> (tempfile::TempDir, arcforge::pipeline::PipelineRun) {
    if common::pipeline::blessing() {
        bless();
    }
    let out = tempfile::tempdir().unwrap();
    let run = run_into(&Gateway::replay(transcripts_dir()), out.path(), workers);
    (out, run)
}

#[test]
fn replay_matches_golden_files() {
    let (out, _) = replay(2);
    let n = compare_trees(&golden_dir(), out.path()).unwrap();
    // Two tasks, three abstractions, manifest, fidelity and outcomes.
    assert_eq!(n, 8);
}

#[test]
fn worker_count_does_not_change_outputs() {
    let (a, _) = replay(1);
    let (b, _) = replay(3);
    compare_trees(a.path(), b.path()).unwrap();
}

#[test]
fn conditional_stage_rates() {
    let (out, run) = replay(2);
    let f = &run.fidelity;
    assert_eq!(f.rate(FidelityStage::Abstraction), Rate::new(3, 3));
    assert_eq!(f.rate(FidelityStage::Sketch), Rate::new(2, 3));
    assert_eq!(f.rate(FidelityStage::Task), Rate::new(2, 2));
    assert_eq!(f.rate(FidelityStage::Validator), Rate::new(2, 2));
    assert_eq!(f.rate(FidelityStage::Sketch).to_string(), "66.67%");
    let written: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join(FIDELITY_FILE)).unwrap()).unwrap();
    assert_eq!(written["sketch"]["rate"], "66.67%");
}

#[test]
fn outcomes_name_the_failing_source() {
    let (_, run) = replay(2);
    let ids: Vec<&str> = run.tasks.iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, ["snowfall-v1", "spinning_fan-v1"]);
    let windmill = run.outcomes.iter().find(|o| o.source_id == "windmill").unwrap();
    assert_eq!(windmill.failure.as_ref().unwrap().0, FidelityStage::Sketch);
    assert!(windmill.candidate.is_none() && windmill.task.is_none());
    for o in run.outcomes.iter().filter(|o| o.task.is_some()) {
        assert_eq!(o.verdict.as_ref().unwrap().outcome, FilterOutcome::Pass);
    }
}

#[test]
fn gif_abstraction_comes_from_the_vision_transcript() {
    let (_, run) = replay(1);
    let snow = run.outcomes.iter().find(|o| o.source_id == "snowfall").unwrap();
    let objects: Vec<(&str, &str)> =
        snow.abstraction.as_ref().unwrap().objects.iter().map(|o| (o.name.as_str(), o.kind.as_str())).collect();
    assert_eq!(objects, [("snowflake", "explicit"), ("ground", "explicit")]);
    let sources = arcforge::pipeline::load_sources(&common::pipeline::sources_dir(), 8).unwrap();
    assert!(matches!(sources[0].origin, SourceOrigin::LocalFile(_)));
    assert_eq!(sources[0].frames.len(), 4);
}

#[test]
fn task_files_carry_full_provenance() {
    let dir = golden_dir().join("tasks");
    for (name, stages) in [("snowfall-v1.json", vec!["step1", "step2", "step3"]), ("spinning_fan-v1.json", vec!["step2", "step3"])] {
        let task = parse_task_file(&std::fs::read(dir.join(name)).unwrap()).unwrap();
        let p = &task.provenance;
        assert_eq!(p.source_gif_id.as_deref(), Some(name.trim_end_matches("-v1.json")));
        assert_eq!(p.pipeline_version.as_str(), "v1");
        let used: Vec<&str> = p.stage_configs.iter().map(|c| c.stage.as_str()).collect();
        assert_eq!(used, stages);
        assert_eq!(task.analogy, task.sketch.description);
        assert_eq!(task.pairs.train.len() + task.pairs.test.len(), 4);
        assert!(task.metrics.is_some());
    }
}
