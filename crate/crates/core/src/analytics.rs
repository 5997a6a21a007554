//! Dataset statistics, task-type classification and analogy-alignment
//! scoring.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::llm::{find_json_object, Stage};
use crate::pipeline::{StageCaller, StageFailure};
use crate::retrieval::{cosine, Embedder, EmbeddingVector, RetrievalError};
use crate::task::{parse_plain_arc, parse_task_file, ArcTask, TaskPairs};

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{path}: {message}")]
    Load { path: String, message: String },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Stage(#[from] StageFailure),
}

/// The fixed task-type taxonomy.
pub const TASK_TYPES: [&str; 20] = [
    "Rotational Symmetry & Perspective Spin",
    "Kaleidoscope & Symmetry Expansion",
    "Pendulum & Pivot Rotation",
    "Walking & Forward Locomotion",
    "Falling & Stacking Blocks",
    "Periodic Movement & Horizontal Loop",
    "Color Flicker & Blinking",
    "Gradient & Layered Color Changes",
    "Glitch & Breaking Patterns",
    "Wave & Diagonal Flow",
    "Gravity & Liquid Flow",
    "Slow Environmental Change",
    "Scaling Burst & Shape Morphing",
    "Attach/Detach Clusters",
    "Layer Separation & Merging",
    "Text & Punctuation Transformation",
    "Minimal Motion Overlay",
    "Static Verification & No Change",
    "Fractal Expansion & Self-Similar Repeats",
    "Sequential Pattern Growth & Transition",
];

/// Spread estimator for [`dataset_stats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdEstimator {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1; a single observation has spread 0.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64], estimator: StdEstimator) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let denom = match estimator {
            StdEstimator::Population => n,
            StdEstimator::Sample => n - 1.0,
        };
        let std = if denom > 0.0 { (ss / denom).sqrt() } else { 0.0 };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub task_count: usize,
    pub pair_count: usize,
    /// Cells (h×w) per input grid, over all pairs.
    pub input_cells: MeanStd,
    /// Cells per output grid, over all pairs.
    pub output_cells: MeanStd,
    /// Distinct colors over the union of a task's grids.
    pub colors_per_task: MeanStd,
}

pub fn dataset_stats<'a>(
    tasks: impl IntoIterator<Item = &'a TaskPairs>,
    estimator: StdEstimator,
) -> Result<DatasetStats, AnalyticsError> {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut colors = Vec::new();
    for pairs in tasks {
        let mut seen = HashSet::new();
        for p in pairs.iter() {
            inputs.push((p.input.height() * p.input.width()) as f64);
            outputs.push((p.output.height() * p.output.width()) as f64);
            for g in [&p.input, &p.output] {
                seen.extend(g.cells().iter().map(|c| c.code()));
            }
        }
        colors.push(seen.len() as f64);
    }
    if colors.is_empty() {
        return Err(AnalyticsError::EmptyDataset);
    }
    Ok(DatasetStats {
        task_count: colors.len(),
        pair_count: inputs.len(),
        input_cells: MeanStd::of(&inputs, estimator),
        output_cells: MeanStd::of(&outputs, estimator),
        colors_per_task: MeanStd::of(&colors, estimator),
    })
}

/// A task read from disk in either the full task format or plain
/// `{train, test}` form.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedTask {
    Full(Box<ArcTask>),
    Plain { id: String, pairs: TaskPairs },
}

impl LoadedTask {
    pub fn id(&self) -> &str {
        match self {
            LoadedTask::Full(t) => &t.id,
            LoadedTask::Plain { id, .. } => id,
        }
    }

    pub fn pairs(&self) -> &TaskPairs {
        match self {
            LoadedTask::Full(t) => &t.pairs,
            LoadedTask::Plain { pairs, .. } => pairs,
        }
    }

    /// Concept keywords, available for full task files only.
    pub fn keywords(&self) -> &[String] {
        match self {
            LoadedTask::Full(t) => &t.sketch.concepts,
            LoadedTask::Plain { .. } => &[],
        }
    }
}

fn json_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            json_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}

/// Loads every `.json` task under `dir`, recursively, in path order.
/// Files that are neither format are skipped with a warning.
pub fn load_dataset(dir: &Path) -> Result<Vec<LoadedTask>, AnalyticsError> {
    let mut files = Vec::new();
    json_files(dir, &mut files).map_err(|e| AnalyticsError::Load { path: dir.display().to_string(), message: e.to_string() })?;
    files.sort();
    let mut tasks = Vec::new();
    for path in files {
        let bytes = std::fs::read(&path)
            .map_err(|e| AnalyticsError::Load { path: path.display().to_string(), message: e.to_string() })?;
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        match parse_task_file(&bytes) {
            Ok(t) => tasks.push(LoadedTask::Full(Box::new(t))),
            Err(full_err) => match parse_plain_arc(&bytes) {
                Ok(pairs) => tasks.push(LoadedTask::Plain { id, pairs }),
                Err(_) => log::warn!("{}: skipped: {full_err}", path.display()),
            },
        }
    }
    Ok(tasks)
}

/// Counts per taxonomy label; a task may add to several.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeHistogram {
    counts: [u64; TASK_TYPES.len()],
}

impl TypeHistogram {
    pub fn add(&mut self, labels: &[&str]) {
        for label in labels {
            if let Some(i) = TASK_TYPES.iter().position(|t| t == label) {
                self.counts[i] += 1;
            }
        }
    }

    pub fn count(&self, label: &str) -> u64 {
        TASK_TYPES.iter().position(|t| *t == label).map_or(0, |i| self.counts[i])
    }

    pub fn to_json(&self) -> Value {
        Value::Object(TASK_TYPES.iter().zip(self.counts).map(|(t, c)| (t.to_string(), Value::from(c))).collect())
    }

    /// `type,count` rows in taxonomy order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("type,count\n");
        for (t, c) in TASK_TYPES.iter().zip(self.counts) {
            out.push_str(&format!("\"{t}\",{c}\n"));
        }
        out
    }
}

/// Taxonomy labels named in a classifier reply, in reply order without
/// repeats. Labels outside the taxonomy are dropped with a warning.
pub fn parse_type_labels(reply: &str) -> Result<Vec<&'static str>, String> {
    let v = find_json_object(reply).ok_or("no JSON object in reply")?;
    let items = v.get("types").and_then(Value::as_array).ok_or("missing `types` list")?;
    let mut labels: Vec<&'static str> = Vec::new();
    for item in items {
        let Some(s) = item.as_str() else {
            log::warn!("classifier: ignoring non-string label {item}");
            continue;
        };
        match TASK_TYPES.iter().find(|t| t.eq_ignore_ascii_case(s.trim())) {
            Some(t) if !labels.contains(t) => labels.push(t),
            Some(_) => {}
            None => log::warn!("classifier: dropping off-taxonomy label {s:?}"),
        }
    }
    Ok(labels)
}

/// Maps a task's concept keywords to taxonomy labels. No keywords means no
/// labels, without a model call.
pub fn classify_types(keywords: &[String], caller: &StageCaller<'_>) -> Result<Vec<&'static str>, AnalyticsError> {
    if keywords.iter().all(|k| k.trim().is_empty()) {
        return Ok(Vec::new());
    }
    let taxonomy: String = TASK_TYPES.iter().enumerate().map(|(i, t)| format!("{}. {t}\n", i + 1)).collect();
    let values = BTreeMap::from([("taxonomy", taxonomy.trim_end().to_string()), ("keywords", keywords.join(", "))]);
    Ok(caller.ask(Stage::Classifier, &values, &[], parse_type_labels)?)
}

/// Cosine similarity of the two embedded texts. Equal nonzero embeddings
/// score exactly 1.
pub fn embed_similarity(a: &str, b: &str, embedder: &dyn Embedder) -> Result<f64, AnalyticsError> {
    let mut vs = embedder.embed(&[a.to_string(), b.to_string()])?;
    let (vb, va) = (vs.pop(), vs.pop());
    let (Some(va), Some(vb)) = (va, vb) else {
        return Err(RetrievalError::Embedder("embedder returned too few vectors".into()).into());
    };
    let (u, v) = (EmbeddingVector::new(va, embedder.model_id()), EmbeddingVector::new(vb, embedder.model_id()));
    let sim = cosine(&u, &v)?;
    if u.values == v.values {
        return Ok(1.0);
    }
    Ok(sim.clamp(-1.0, 1.0))
}

/// Numbers written in `line`, with `%` values scaled to fractions. A
/// leading minus sign is kept, so negative values fall outside [0, 1].
fn numbers(line: &str) -> Vec<f64> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let starts = bytes[i].is_ascii_digit()
            || (bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit));
        let glued = i > 0 && (bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'.');
        if !starts || glued {
            i += 1;
            continue;
        }
        let begin = i;
        let mut seen_dot = false;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || (bytes[i] == b'.' && !seen_dot && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))) {
            seen_dot |= bytes[i] == b'.';
            i += 1;
        }
        let Ok(mut x) = line[begin..i].parse::<f64>() else { continue };
        if begin > 0 && bytes[begin - 1] == b'-' {
            x = -x;
        }
        if bytes.get(i) == Some(&b'%') {
            x /= 100.0;
        }
        out.push(x);
    }
    out
}

/// The judge score: on the last line that holds a number in [0, 1], the
/// first such number. Denominators like the `1` in `0.8/1` therefore lose
/// to the score before them.
pub fn extract_score(reply: &str) -> Result<f64, String> {
    reply
        .lines()
        .rev()
        .find_map(|line| numbers(line).into_iter().find(|x| (0.0..=1.0).contains(x)))
        .ok_or_else(|| "no score between 0 and 1 in reply".to_string())
}

/// Asks the judge model for a similarity score, re-prompting once when the
/// reply holds no usable number.
pub fn judge_similarity(candidate: &str, ground_truth: &str, caller: &StageCaller<'_>) -> Result<f64, AnalyticsError> {
    let caller = StageCaller { reprompt_budget: caller.reprompt_budget.max(1), ..caller.clone() };
    let values = BTreeMap::from([("candidate", candidate.to_string()), ("ground_truth", ground_truth.to_string())]);
    Ok(caller.ask(Stage::Judge, &values, &[], extract_score)?)
}
