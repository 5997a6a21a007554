//! Task, sketch, program and seed records, plus the canonical task-file
//! format.
//!
//! Task files are one JSON document per task:
//!
//! ```text
//! { "id", "train": [{input, output}], "test": [...], "analogy",
//!   "solution": {library, main_code, generate_input_code, total_code},
//!   "sketch": {concepts, description}, "provenance", "metrics"?, "abstraction_ref"? }
//! ```
//!
//! Serialization is canonical: object keys sorted, no whitespace.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::grid::{grid_hash, Grid, GridRole};
use crate::llm::StageConfig;
use crate::metrics::ComplexityReport;
use crate::schema::{parse_document, Cursor, SchemaError};

pub use crate::abstraction::ObjectKind;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridPair {
    pub input: Grid,
    pub output: Grid,
}

impl GridPair {
    pub fn to_json(&self) -> Value {
        json!({ "input": self.input, "output": self.output })
    }

    fn from_cursor(c: &Cursor<'_>) -> Result<Self, SchemaError> {
        Ok(GridPair {
            input: c.field("input")?.grid(GridRole::Input)?,
            output: c.field("output")?.grid(GridRole::Output)?,
        })
    }
}

/// The demonstration pairs of a task, already split.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaskPairs {
    pub train: Vec<GridPair>,
    pub test: Vec<GridPair>,
}

impl TaskPairs {
    /// Splits `pairs` so the last one is held out as the test pair.
    pub fn split_last(mut pairs: Vec<GridPair>) -> Self {
        let test = pairs.pop().into_iter().collect();
        TaskPairs { train: pairs, test }
    }

    pub fn iter(&self) -> impl Iterator<Item = &GridPair> {
        self.train.iter().chain(self.test.iter())
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Concepts plus a one-paragraph description of an ARC-style task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSketch {
    pub concepts: Vec<String>,
    pub description: String,
}

impl TaskSketch {
    pub fn new(concepts: Vec<String>, description: String) -> Result<Self, String> {
        if concepts.is_empty() {
            return Err("sketch has no concepts".into());
        }
        if description.trim().is_empty() {
            return Err("sketch has an empty description".into());
        }
        Ok(TaskSketch { concepts, description })
    }

    /// Parses the two comment-header block:
    ///
    /// ```text
    /// # concepts:
    /// # gravity, stacking
    /// # description:
    /// # In the input ...
    /// ```
    ///
    /// Surrounding prose and code fences are ignored. The block may also
    /// start a source file, as in hand-written seed programs.
    pub fn parse_headers(text: &str) -> Result<Self, String> {
        enum Section {
            None,
            Concepts,
            Description,
            Done,
        }
        let mut section = Section::None;
        let mut concepts_text = Vec::new();
        let mut description = Vec::new();
        let mut saw_concepts = false;
        let mut saw_description = false;
        for line in text.lines() {
            let trimmed = line.trim();
            let body = trimmed.strip_prefix('#').map(str::trim);
            let header = |name: &str| {
                body.and_then(|b| {
                    let lower = b.to_ascii_lowercase();
                    lower.starts_with(name).then(|| b[name.len()..].trim().to_string())
                })
            };
            if let Some(rest) = header("concepts:") {
                saw_concepts = true;
                section = Section::Concepts;
                if !rest.is_empty() {
                    concepts_text.push(rest);
                }
                continue;
            }
            if let Some(rest) = header("description:") {
                saw_description = true;
                section = Section::Description;
                if !rest.is_empty() {
                    description.push(rest);
                }
                continue;
            }
            match section {
                Section::Concepts => match body {
                    Some(b) if !b.is_empty() => concepts_text.push(b.to_string()),
                    Some(_) => {}
                    None if trimmed.is_empty() => {}
                    None => section = Section::Done,
                },
                Section::Description => match body {
                    Some(b) if !b.is_empty() => description.push(b.to_string()),
                    Some(_) => {}
                    None if trimmed.is_empty() && description.is_empty() => {}
                    None => section = Section::Done,
                },
                Section::None | Section::Done => {}
            }
        }
        if !saw_concepts {
            return Err("missing `# concepts:` header".into());
        }
        if !saw_description {
            return Err("missing `# description:` header".into());
        }
        let concepts = concepts_text
            .join(",")
            .split(',')
            .map(|c| c.trim().trim_end_matches('.').trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        TaskSketch::new(concepts, description.join(" "))
    }

    /// The two-header block, as pasted into prompts.
    pub fn to_headers(&self) -> String {
        format!("# concepts:\n# {}\n\n# description:\n# {}\n", self.concepts.join(", "), self.description)
    }
}

/// Generated source awaiting validation.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CandidateProgram {
    #[serde(rename = "library")]
    pub library_prelude: String,
    #[serde(rename = "main_code")]
    pub main_source: String,
    #[serde(rename = "generate_input_code")]
    pub generate_input_source: String,
    #[serde(rename = "total_code")]
    pub total_source: String,
}

pub const MAIN_ENTRY: &str = "main";
pub const GENERATOR_ENTRY: &str = "generate_input";

/// True when some line of `source` starts a `def name(` definition.
pub fn defines_function(source: &str, name: &str) -> bool {
    source.lines().any(|line| {
        let t = line.trim_start();
        let Some(rest) = t.strip_prefix("def ").or_else(|| t.strip_prefix("async def ")) else {
            return false;
        };
        let Some(after) = rest.trim_start().strip_prefix(name) else {
            return false;
        };
        after.trim_start().starts_with('(')
    })
}

impl CandidateProgram {
    /// Checks the program invariants: non-empty source and both entry points
    /// present by name.
    pub fn check(&self) -> Result<(), String> {
        if self.total_source.trim().is_empty() {
            return Err("total source is empty".into());
        }
        for entry in [MAIN_ENTRY, GENERATOR_ENTRY] {
            if !defines_function(&self.total_source, entry) {
                return Err(format!("entry point `{entry}` is not defined"));
            }
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("plain strings")
    }

    fn from_cursor(c: &Cursor<'_>) -> Result<Self, SchemaError> {
        let p = CandidateProgram {
            library_prelude: c.field("library")?.str()?.to_string(),
            main_source: c.field("main_code")?.str()?.to_string(),
            generate_input_source: c.field("generate_input_code")?.str()?.to_string(),
            total_source: c.field("total_code")?.str()?.to_string(),
        };
        Ok(p)
    }

    /// Source with the shared library lines removed; the code metrics are
    /// computed over this.
    pub fn solution_source(&self) -> String {
        let prelude: HashSet<&str> =
            self.library_prelude.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let mut out = String::with_capacity(self.total_source.len());
        for line in self.total_source.lines() {
            if prelude.contains(line.trim()) {
                continue;
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PipelineVersion {
    #[default]
    V1,
    V2,
}

impl PipelineVersion {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineVersion::V1 => "v1",
            PipelineVersion::V2 => "v2",
        }
    }
}

impl std::str::FromStr for PipelineVersion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "v1" => Ok(PipelineVersion::V1),
            "v2" => Ok(PipelineVersion::V2),
            other => Err(format!("unknown pipeline version {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub source_gif_id: Option<String>,
    pub pipeline_version: PipelineVersion,
    pub stage_configs: Vec<StageConfig>,
}

impl Provenance {
    fn to_json(&self) -> Value {
        let mut m = Map::new();
        if let Some(id) = &self.source_gif_id {
            m.insert("source_gif_id".into(), Value::String(id.clone()));
        }
        m.insert("pipeline_version".into(), Value::String(self.pipeline_version.as_str().into()));
        m.insert(
            "stage_configs".into(),
            Value::Array(self.stage_configs.iter().map(StageConfig::to_json).collect()),
        );
        Value::Object(m)
    }

    fn from_cursor(c: &Cursor<'_>) -> Result<Self, SchemaError> {
        let source_gif_id = c.opt_field("source_gif_id")?.map(|s| s.str().map(str::to_string)).transpose()?;
        let version_cursor = c.field("pipeline_version")?;
        let pipeline_version =
            version_cursor.str()?.parse().map_err(|e: String| version_cursor.invalid(e))?;
        let stage_configs = c
            .field("stage_configs")?
            .array()?
            .iter()
            .map(StageConfig::from_cursor)
            .collect::<Result<_, _>>()?;
        Ok(Provenance { source_gif_id, pipeline_version, stage_configs })
    }
}

/// A validated task: demonstration pairs, the analogy, the solution program
/// and its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcTask {
    pub id: String,
    pub pairs: TaskPairs,
    pub analogy: String,
    pub solution: CandidateProgram,
    pub sketch: TaskSketch,
    pub abstraction_ref: Option<String>,
    pub metrics: Option<ComplexityReport>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{0}")]
    Invariant(String),
}

impl TaskError {
    pub fn path(&self) -> Option<&str> {
        match self {
            TaskError::Schema(e) => e.path(),
            TaskError::Invariant(_) => None,
        }
    }
}

impl ArcTask {
    /// Checks the structural invariants: at least two pairs, non-empty train
    /// and test partitions, pairwise distinct inputs, a well-formed solution.
    pub fn check(&self) -> Result<(), TaskError> {
        if self.id.trim().is_empty() {
            return Err(TaskError::Invariant("task id is empty".into()));
        }
        if self.pairs.train.is_empty() || self.pairs.test.is_empty() {
            return Err(TaskError::Invariant("train and test partitions must both be non-empty".into()));
        }
        if self.pairs.len() < 2 {
            return Err(TaskError::Invariant("a task needs at least 2 pairs".into()));
        }
        let mut seen = HashSet::new();
        for (i, pair) in self.pairs.iter().enumerate() {
            if !pair.input.fits_input_bounds() {
                return Err(TaskError::Invariant(format!("pair {i}: input exceeds 30x30")));
            }
            if !seen.insert(grid_hash(&pair.input)) {
                return Err(TaskError::Invariant(format!("pair {i}: duplicate input grid")));
            }
        }
        self.solution.check().map_err(TaskError::Invariant)?;
        if self.sketch.concepts.is_empty() || self.sketch.description.trim().is_empty() {
            return Err(TaskError::Invariant("sketch must have concepts and a description".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), Value::String(self.id.clone()));
        m.insert("train".into(), Value::Array(self.pairs.train.iter().map(GridPair::to_json).collect()));
        m.insert("test".into(), Value::Array(self.pairs.test.iter().map(GridPair::to_json).collect()));
        m.insert("analogy".into(), Value::String(self.analogy.clone()));
        m.insert("solution".into(), self.solution.to_json());
        m.insert("sketch".into(), serde_json::to_value(&self.sketch).expect("plain data"));
        m.insert("provenance".into(), self.provenance.to_json());
        if let Some(r) = &self.abstraction_ref {
            m.insert("abstraction_ref".into(), Value::String(r.clone()));
        }
        if let Some(metrics) = &self.metrics {
            m.insert("metrics".into(), serde_json::to_value(metrics).expect("plain data"));
        }
        Value::Object(m)
    }

    pub fn from_value(doc: &Value) -> Result<Self, TaskError> {
        let root = Cursor::root(doc);
        root.object()?;
        let id = root.field("id")?.non_empty_str()?.to_string();
        let pairs_of = |key: &str| -> Result<Vec<GridPair>, SchemaError> {
            root.field(key)?.array()?.iter().map(GridPair::from_cursor).collect()
        };
        let train = pairs_of("train")?;
        let test = pairs_of("test")?;
        let analogy = root.field("analogy")?.str()?.to_string();
        let solution = CandidateProgram::from_cursor(&root.field("solution")?)?;
        let sketch_c = root.field("sketch")?;
        let sketch = TaskSketch {
            concepts: sketch_c.field("concepts")?.string_list()?,
            description: sketch_c.field("description")?.str()?.to_string(),
        };
        let provenance = Provenance::from_cursor(&root.field("provenance")?)?;
        let abstraction_ref =
            root.opt_field("abstraction_ref")?.map(|c| c.str().map(str::to_string)).transpose()?;
        let metrics = root.opt_field("metrics")?.map(|c| ComplexityReport::from_cursor(&c)).transpose()?;
        let task = ArcTask {
            id,
            pairs: TaskPairs { train, test },
            analogy,
            solution,
            sketch,
            abstraction_ref,
            metrics,
            provenance,
        };
        task.check()?;
        Ok(task)
    }
}

/// A candidate program together with the task context it was generated
/// for. The validator turns it into an [`ArcTask`] or a rejection.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub program: CandidateProgram,
    pub analogy: String,
    pub sketch: TaskSketch,
    pub abstraction_ref: Option<String>,
    pub provenance: Provenance,
}

impl Candidate {
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), Value::String(self.id.clone()));
        m.insert("program".into(), self.program.to_json());
        m.insert("analogy".into(), Value::String(self.analogy.clone()));
        m.insert("sketch".into(), serde_json::to_value(&self.sketch).expect("plain data"));
        m.insert("provenance".into(), self.provenance.to_json());
        if let Some(r) = &self.abstraction_ref {
            m.insert("abstraction_ref".into(), Value::String(r.clone()));
        }
        Value::Object(m)
    }

    pub fn from_value(doc: &Value) -> Result<Self, TaskError> {
        let root = Cursor::root(doc);
        root.object()?;
        let sketch_c = root.field("sketch")?;
        let candidate = Candidate {
            id: root.field("id")?.non_empty_str()?.to_string(),
            program: CandidateProgram::from_cursor(&root.field("program")?)?,
            analogy: root.field("analogy")?.str()?.to_string(),
            sketch: TaskSketch {
                concepts: sketch_c.field("concepts")?.string_list()?,
                description: sketch_c.field("description")?.str()?.to_string(),
            },
            abstraction_ref: root.opt_field("abstraction_ref")?.map(|c| c.str().map(str::to_string)).transpose()?,
            provenance: Provenance::from_cursor(&root.field("provenance")?)?,
        };
        candidate.program.check().map_err(TaskError::Invariant)?;
        Ok(candidate)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, TaskError> {
        Candidate::from_value(&parse_document(bytes)?)
    }

    /// Builds the accepted task from validated pairs.
    pub fn into_task(self, pairs: Vec<GridPair>, metrics: Option<ComplexityReport>) -> ArcTask {
        ArcTask {
            id: self.id,
            pairs: TaskPairs::split_last(pairs),
            analogy: self.analogy,
            solution: self.program,
            sketch: self.sketch,
            abstraction_ref: self.abstraction_ref,
            metrics,
            provenance: self.provenance,
        }
    }
}

pub fn parse_task_file(bytes: &[u8]) -> Result<ArcTask, TaskError> {
    ArcTask::from_value(&parse_document(bytes)?)
}

/// Canonical bytes: sorted keys, compact separators, no trailing newline.
pub fn serialize_task_file(task: &ArcTask) -> Vec<u8> {
    canonical_json(&task.to_json())
}

/// Serializes with sorted object keys and no insignificant whitespace.
pub fn canonical_json(value: &Value) -> Vec<u8> {
    // serde_json's default map is ordered by key, so plain compact output is
    // already canonical.
    serde_json::to_vec(value).expect("in-memory JSON values always serialize")
}

/// Reads a plain `{train, test}` ARC file, ignoring any other keys.
pub fn parse_plain_arc(bytes: &[u8]) -> Result<TaskPairs, SchemaError> {
    let doc = parse_document(bytes)?;
    let root = Cursor::root(&doc);
    let pairs_of = |key: &str| -> Result<Vec<GridPair>, SchemaError> {
        root.field(key)?.array()?.iter().map(GridPair::from_cursor).collect()
    };
    Ok(TaskPairs { train: pairs_of("train")?, test: pairs_of("test")? })
}

/// Explicit-object generator code for the second pipeline version.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSeed {
    pub name: String,
    pub kind: ObjectKind,
    pub generator_source: String,
    pub pixel_meaning: BTreeMap<String, String>,
    pub parameter_desc: BTreeMap<String, String>,
    pub embedding: Option<Vec<f64>>,
}

impl ObjectSeed {
    /// The first function defined in the generator source.
    pub fn function_name(&self) -> Option<&str> {
        first_function_name(&self.generator_source)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), Value::String(self.name.clone()));
        m.insert("type".into(), Value::String(self.kind.as_str().into()));
        m.insert("function_code".into(), Value::String(self.generator_source.clone()));
        m.insert("pixel_meaning".into(), json!(self.pixel_meaning));
        m.insert("parameter_desc".into(), json!(self.parameter_desc));
        if let Some(e) = &self.embedding {
            m.insert("embedding".into(), json!(e));
        }
        Value::Object(m)
    }

    pub fn from_value(doc: &Value) -> Result<Self, SchemaError> {
        let root = Cursor::root(doc);
        let kind_c = root.field("type")?;
        let kind = ObjectKind::parse(kind_c.str()?).ok_or_else(|| kind_c.invalid("expected explicit or implicit"))?;
        let seed = ObjectSeed {
            name: root.field("name")?.non_empty_str()?.to_string(),
            kind,
            generator_source: root.field("function_code")?.non_empty_str()?.to_string(),
            pixel_meaning: opt_map(&root, "pixel_meaning")?,
            parameter_desc: opt_map(&root, "parameter_desc")?,
            embedding: root
                .opt_field("embedding")?
                .map(|c| c.array()?.iter().map(|x| x.f64()).collect::<Result<Vec<_>, _>>())
                .transpose()?,
        };
        if seed.embedding.is_some() && seed.kind != ObjectKind::Explicit {
            return Err(root.invalid("only explicit object seeds may carry an embedding"));
        }
        Ok(seed)
    }
}

fn opt_map(c: &Cursor<'_>, key: &str) -> Result<BTreeMap<String, String>, SchemaError> {
    Ok(c.opt_field(key)?.map(|m| m.string_map()).transpose()?.unwrap_or_default().into_iter().collect())
}

pub fn first_function_name(source: &str) -> Option<&str> {
    source.lines().find_map(|line| {
        let rest = line.trim_start().strip_prefix("def ")?;
        let end = rest.find('(')?;
        let name = rest[..end].trim();
        (!name.is_empty()).then_some(name)
    })
}

/// A hand-written reference task used for demonstrations and retrieval.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedExample {
    pub name: String,
    pub concepts: Vec<String>,
    pub description: String,
    pub source: CandidateProgram,
    pub embedding: Option<Vec<f64>>,
}

impl SeedExample {
    /// Reads a seed program whose header carries `# concepts:` and
    /// `# description:` comment blocks.
    pub fn from_source(name: &str, source: &str) -> Result<Self, String> {
        let sketch = TaskSketch::parse_headers(source).map_err(|e| format!("{name}: {e}"))?;
        Ok(SeedExample {
            name: name.to_string(),
            concepts: sketch.concepts,
            description: sketch.description,
            source: CandidateProgram { total_source: source.to_string(), ..Default::default() },
            embedding: None,
        })
    }

    /// Loads every `*.py` file in `dir`, sorted by file name.
    pub fn load_dir(dir: &Path) -> std::io::Result<Vec<SeedExample>> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "py"))
            .collect();
        paths.sort();
        paths
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p)?;
                let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("seed");
                SeedExample::from_source(name, &text)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
            })
            .collect()
    }
}

/// One line of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub id: String,
    pub digest: String,
}

impl ManifestEntry {
    pub fn for_task_file(path: &str, task: &ArcTask, bytes: &[u8]) -> Self {
        ManifestEntry { path: path.to_string(), id: task.id.clone(), digest: sha256_hex(bytes) }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    entries.iter().map(|e| serde_json::to_string(e).expect("plain data") + "\n").collect()
}

pub fn read_manifest(text: &str) -> Result<Vec<ManifestEntry>, SchemaError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SchemaError::Invalid {
                path: format!("line {}", i + 1),
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_block_parses_with_prose_and_fence() {
        let reply = "Here is my idea.\n```\n# concepts:\n# gravity, stacking, \n# accumulation\n\n# description:\n# Blocks fall down.\n# They stack.\n```\nThanks";
        let s = TaskSketch::parse_headers(reply).unwrap();
        assert_eq!(s.concepts, vec!["gravity", "stacking", "accumulation"]);
        assert_eq!(s.description, "Blocks fall down. They stack.");
    }

    #[test]
    fn header_block_requires_both_headers() {
        assert!(TaskSketch::parse_headers("# concepts:\n# a\n").is_err());
        assert!(TaskSketch::parse_headers("# description:\n# a\n").is_err());
        assert!(TaskSketch::parse_headers("no headers at all").is_err());
    }

    #[test]
    fn seed_source_header_stops_at_code() {
        let src = "from common import *\n\n# concepts:\n# flood fill\n\n# description:\n# Fill enclosed areas.\n\ndef main(g):\n    # not part of description\n    return g\n";
        let seed = SeedExample::from_source("fill", src).unwrap();
        assert_eq!(seed.concepts, vec!["flood fill"]);
        assert_eq!(seed.description, "Fill enclosed areas.");
    }

    #[test]
    fn entry_point_detection() {
        assert!(defines_function("def main(g):\n  return g", "main"));
        assert!(defines_function("    def main (g):", "main"));
        assert!(!defines_function("def main_helper(g):", "main"));
        assert!(!defines_function("# def main(g):", "main"));
        assert_eq!(first_function_name("x = 1\ndef generate_amp(w=3):\n"), Some("generate_amp"));
    }

    #[test]
    fn solution_source_strips_prelude_lines() {
        let p = CandidateProgram {
            library_prelude: "from common import *\nimport numpy as np".into(),
            total_source: "from common import *\nimport numpy as np\n\ndef main(g):\n    return g\n".into(),
            ..Default::default()
        };
        assert_eq!(p.solution_source(), "\ndef main(g):\n    return g\n");
    }
}
