//! The synthesis orchestrator: GIF source → visual abstraction → task sketch
//! → candidate program → validated task.
//!
//! Sources run on a bounded worker pool; the stages of one source run in
//! order. A failure at one stage stops that source and never touches the
//! counters of later stages, so each fidelity bucket is a conditional rate.

pub mod source;
pub mod stages;
pub mod template;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

pub use source::{decode_gif_frames, load_sources, sample_frame_indices, GifSource, SourceError, SourceOrigin, DEFAULT_MAX_FRAMES};
pub use stages::{StageCaller, StageFailure, V2Output, RETRIEVAL_K, SKETCH_EXAMPLES};
pub use template::{PromptSet, PromptTemplate, RenderedPrompt, TemplateError};

use crate::abstraction::VisualAbstraction;
use crate::exec::RunnerConfig;
use crate::llm::{Gateway, Stage, StageConfig};
use crate::retrieval::{Embedder, VectorIndex};
use crate::task::{
    canonical_json, serialize_task_file, write_manifest, ArcTask, Candidate, ManifestEntry, ObjectSeed,
    PipelineVersion, Provenance, SeedExample, TaskSketch,
};
use crate::grid::grid_hash;
use crate::validate::{
    derive_seed, validate_candidate, DigestSet, FidelityReport, FidelityStage, FilterOutcome, FilterVerdict,
    ValidationConfig,
};

/// Per-stage settings shared by all sources of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub version: PipelineVersion,
    pub stages: BTreeMap<Stage, StageConfig>,
    pub rng_seed: u64,
    pub reprompt_budget: u32,
    pub workers: usize,
    pub validation: ValidationConfig,
    pub runner: RunnerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: PipelineVersion::V1,
            stages: Stage::ALL.into_iter().map(|s| (s, StageConfig::default_for(s))).collect(),
            rng_seed: 0,
            reprompt_budget: 0,
            workers: 4,
            validation: ValidationConfig::default(),
            runner: RunnerConfig::Fake,
        }
    }
}

/// Read-only resources the stages draw on.
pub struct PipelineResources<'a> {
    pub gateway: &'a Gateway,
    pub prompts: &'a PromptSet,
    pub embedder: &'a dyn Embedder,
    /// Examples sampled into the sketch prompt.
    pub seed_pool: &'a [SeedExample],
    /// Examples retrieved for the first code-generation path.
    pub seed_index: &'a VectorIndex<SeedExample>,
    /// Object seeds for the second path. New seeds made for one source are
    /// kept with that source, so results do not depend on scheduling.
    pub object_index: &'a VectorIndex<ObjectSeed>,
    pub common_lib: &'a str,
}

/// How far one source got.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceOutcome {
    pub source_id: String,
    pub abstraction: Option<VisualAbstraction>,
    pub sketch: Option<TaskSketch>,
    pub candidate: Option<Candidate>,
    pub new_seeds: Vec<ObjectSeed>,
    /// The stage that stopped this source and why.
    pub failure: Option<(FidelityStage, String)>,
    pub verdict: Option<FilterVerdict>,
    pub task: Option<ArcTask>,
}

impl SourceOutcome {
    fn new(source_id: &str) -> Self {
        SourceOutcome {
            source_id: source_id.to_string(),
            abstraction: None,
            sketch: None,
            candidate: None,
            new_seeds: Vec::new(),
            failure: None,
            verdict: None,
            task: None,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "source_id": self.source_id,
            "failed_stage": self.failure.as_ref().map(|(s, _)| s.as_str()),
            "failure": self.failure.as_ref().map(|(_, m)| m),
            "verdict": self.verdict.as_ref().map(|v| json!({"outcome": v.outcome.as_str(), "detail": v.detail})),
            "task_id": self.task.as_ref().map(|t| &t.id),
        })
    }
}

pub struct PipelineRun {
    pub tasks: Vec<ArcTask>,
    pub fidelity: FidelityReport,
    pub outcomes: Vec<SourceOutcome>,
}

/// Seed for one source and purpose, derived from the run seed.
pub fn source_seed(rng_seed: u64, source_id: &str, tag: &str) -> u64 {
    derive_seed(tag, rng_seed, source_id, 0)
}

pub fn task_id(source_id: &str, version: PipelineVersion) -> String {
    format!("{source_id}-{}", version.as_str())
}

/// Runs the three generation stages for one source, recording each result
/// in `fidelity`. Validation is left to the caller.
pub fn run_source(
    source: &GifSource,
    res: &PipelineResources<'_>,
    cfg: &PipelineConfig,
    fidelity: &FidelityReport,
) -> SourceOutcome {
    let mut out = SourceOutcome::new(&source.id);
    let caller = StageCaller {
        gateway: res.gateway,
        prompts: res.prompts,
        configs: &cfg.stages,
        reprompt_budget: cfg.reprompt_budget,
    };
    let mut used: Vec<Stage> = Vec::new();
    let fail = |out: &mut SourceOutcome, stage: FidelityStage, e: &StageFailure| {
        log::warn!("{}: {} stage failed: {e}", source.id, stage.as_str());
        fidelity.accumulate(stage, false);
        out.failure = Some((stage, e.to_string()));
    };

    let abstraction = match &source.origin {
        SourceOrigin::Precomputed(a) => a.clone(),
        SourceOrigin::LocalFile(_) => {
            used.push(Stage::Step1);
            match stages::run_step1(&caller, &source.frames) {
                Ok(a) => a,
                Err(e) => {
                    fail(&mut out, FidelityStage::Abstraction, &e);
                    return out;
                }
            }
        }
    };
    fidelity.accumulate(FidelityStage::Abstraction, true);
    out.abstraction = Some(abstraction.clone());

    used.push(Stage::Step2);
    let sketch_seed = source_seed(cfg.rng_seed, &source.id, "sketch_examples");
    let sketch = match stages::run_step2(&caller, &abstraction, res.seed_pool, sketch_seed) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut out, FidelityStage::Sketch, &e);
            return out;
        }
    };
    fidelity.accumulate(FidelityStage::Sketch, true);
    out.sketch = Some(sketch.clone());

    let generated = match cfg.version {
        PipelineVersion::V1 => {
            used.push(Stage::Step3);
            stages::run_step3_v1(&caller, &sketch, res.seed_index, res.embedder, res.common_lib)
                .map(|program| (program, sketch.description.clone(), Vec::new()))
        }
        PipelineVersion::V2 => {
            let stored = |name: &str| res.object_index.entries().iter().any(|e| e.key == name);
            if abstraction.explicit_objects().any(|o| !stored(&o.name)) {
                used.push(Stage::Step3_1);
            }
            used.push(Stage::Step3_2);
            stages::run_step3_v2(&caller, &sketch, &abstraction, res.object_index, res.embedder).map(|o| {
                let analogy = if o.used_concept.trim().is_empty() { sketch.description.clone() } else { o.used_concept };
                (o.program, analogy, o.new_seeds)
            })
        }
    };
    let (program, analogy, new_seeds) = match generated {
        Ok(g) => g,
        Err(e) => {
            fail(&mut out, FidelityStage::Task, &e);
            return out;
        }
    };
    fidelity.accumulate(FidelityStage::Task, true);
    out.new_seeds = new_seeds;
    out.candidate = Some(Candidate {
        id: task_id(&source.id, cfg.version),
        program,
        analogy,
        sketch,
        abstraction_ref: Some(format!("{ABSTRACTIONS_DIR}/{}.json", source.id)),
        provenance: Provenance {
            source_gif_id: Some(source.id.clone()),
            pipeline_version: cfg.version,
            stage_configs: used.iter().filter_map(|s| cfg.stages.get(s).cloned()).collect(),
        },
    });
    out
}

/// Runs all sources on `cfg.workers` threads, then validates the
/// candidates. Outcomes and tasks keep the order of `sources`; a failing
/// source never stops the others.
pub fn run_pipeline(sources: &[GifSource], res: &PipelineResources<'_>, cfg: &PipelineConfig) -> PipelineRun {
    let fidelity = FidelityReport::new();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers.max(1)).build().expect("thread pool");
    let mut outcomes: Vec<SourceOutcome> = pool.install(|| {
        sources
            .par_iter()
            .map(|s| {
                let mut out = run_source(s, res, cfg, &fidelity);
                if let Some(c) = &out.candidate {
                    let validation = validate_candidate(c, &cfg.runner, &cfg.validation, None);
                    out.verdict = Some(validation.verdict());
                    out.task = validation.task().cloned();
                }
                out
            })
            .collect()
    });
    // The dataset-wide duplicate pass depends on acceptance order, so it
    // runs afterwards in source order.
    let shared = DigestSet::new();
    for out in &mut outcomes {
        let Some(verdict) = &out.verdict else { continue };
        if let Some(task) = &out.task {
            let digests: Vec<_> = task.pairs.iter().map(|p| grid_hash(&p.input)).collect();
            if let Err(i) = shared.insert_all_if_fresh(&digests) {
                out.verdict = Some(FilterVerdict::new(
                    FilterOutcome::DuplicateInput,
                    format!("pair {}: input already used by another task", i + 1),
                ));
                out.task = None;
            }
        } else {
            debug_assert_ne!(verdict.outcome, FilterOutcome::Pass);
        }
        let verdict = out.verdict.as_ref().expect("set above");
        if verdict.outcome != FilterOutcome::Pass {
            log::info!("{}: rejected: {verdict}", out.source_id);
        }
        fidelity.accumulate(FidelityStage::Validator, out.task.is_some());
    }
    let tasks = outcomes.iter().filter_map(|o| o.task.clone()).collect();
    PipelineRun { tasks, fidelity, outcomes }
}

/// Paths written by [`write_run`], relative to the output directory.
pub const TASKS_DIR: &str = "tasks";
pub const ABSTRACTIONS_DIR: &str = "abstractions";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const FIDELITY_FILE: &str = "fidelity.json";
pub const OUTCOMES_FILE: &str = "outcomes.json";

/// Writes canonical task files, the abstractions they reference, a
/// manifest with content digests, the fidelity report and per-source
/// outcomes. Returns the manifest entries.
pub fn write_run(run: &PipelineRun, out_dir: &Path) -> std::io::Result<Vec<ManifestEntry>> {
    std::fs::create_dir_all(out_dir.join(TASKS_DIR))?;
    std::fs::create_dir_all(out_dir.join(ABSTRACTIONS_DIR))?;
    for o in &run.outcomes {
        if let Some(a) = &o.abstraction {
            let path = out_dir.join(ABSTRACTIONS_DIR).join(format!("{}.json", o.source_id));
            std::fs::write(path, canonical_json(&a.to_json()))?;
        }
    }
    let mut entries = Vec::new();
    for task in &run.tasks {
        let rel = format!("{TASKS_DIR}/{}.json", task.id);
        let bytes = serialize_task_file(task);
        std::fs::write(out_dir.join(&rel), &bytes)?;
        entries.push(ManifestEntry::for_task_file(&rel, task, &bytes));
    }
    std::fs::write(out_dir.join(MANIFEST_FILE), write_manifest(&entries))?;
    std::fs::write(out_dir.join(FIDELITY_FILE), canonical_json(&run.fidelity.to_json()))?;
    let outcomes = Value::Array(run.outcomes.iter().map(SourceOutcome::to_json).collect());
    std::fs::write(out_dir.join(OUTCOMES_FILE), canonical_json(&outcomes))?;
    Ok(entries)
}
