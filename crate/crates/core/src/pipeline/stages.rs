//! The individual synthesis stages. Each stage renders its template, calls
//! the gateway and parses the reply; a reply that does not parse may be
//! re-prompted up to the configured budget before the stage fails.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::template::{PromptSet, TemplateError, REPROMPT};
use crate::abstraction::{abstraction_from_value, ObjectKind, VisualAbstraction};
use crate::llm::{extract_json, Attachment, Gateway, GatewayError, ReplySchema, Stage, StageConfig};
use crate::retrieval::{lookup_object_seed, query, Embedder, EmbeddingVector, RetrievalError, VectorIndex};
use crate::task::{defines_function, CandidateProgram, ObjectSeed, SeedExample, TaskSketch, GENERATOR_ENTRY};

/// Examples pasted into the sketch prompt.
pub const SKETCH_EXAMPLES: usize = 75;
/// Seed programs pasted into the code-generation prompt.
pub const RETRIEVAL_K: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum StageFailure {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("{stage}: unusable reply: {message}")]
    Reply { stage: Stage, message: String },
    #[error("seed pool is empty")]
    EmptySeedPool,
    #[error("abstraction lists no explicit objects")]
    NoExplicitObjects,
    #[error("generator never calls seed function `{0}`")]
    MissingInvocation(String),
    #[error("seed for object {0:?} defines no function")]
    SeedWithoutFunction(String),
    #[error("no stage config for {0}")]
    MissingConfig(Stage),
}

/// Shared plumbing for every LLM-backed stage.
#[derive(Clone, Copy)]
pub struct StageCaller<'a> {
    pub gateway: &'a Gateway,
    pub prompts: &'a PromptSet,
    pub configs: &'a BTreeMap<Stage, StageConfig>,
    /// Extra attempts after a reply fails to parse.
    pub reprompt_budget: u32,
}

impl StageCaller<'_> {
    pub fn config(&self, stage: Stage) -> Result<&StageConfig, StageFailure> {
        self.configs.get(&stage).ok_or(StageFailure::MissingConfig(stage))
    }

    /// Renders the stage template, calls the model and parses the reply.
    /// Parse failures are re-prompted with the error appended to the user
    /// text; gateway failures are returned at once.
    pub fn ask<T>(
        &self,
        stage: Stage,
        values: &BTreeMap<&str, String>,
        attachments: &[Attachment],
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, StageFailure> {
        let cfg = self.config(stage)?;
        let prompt = self.prompts.for_stage(stage)?.render(values)?;
        let mut user = prompt.user.clone();
        let mut left = self.reprompt_budget;
        loop {
            let reply = self.gateway.chat(cfg, &prompt.system, &user, attachments)?;
            match parse(&reply) {
                Ok(v) => return Ok(v),
                Err(message) if left > 0 => {
                    left -= 1;
                    log::info!("{stage}: re-prompting after unusable reply: {message}");
                    let note = self.prompts.get(REPROMPT)?.render(&BTreeMap::from([("error", message)]))?;
                    user = format!("{}\n\n{}", prompt.user, note.user);
                }
                Err(message) => return Err(StageFailure::Reply { stage, message }),
            }
        }
    }
}

/// Parses a step-1 reply into an abstraction. Soft-bound warnings are
/// logged, not fatal.
pub fn parse_abstraction_reply(reply: &str) -> Result<VisualAbstraction, String> {
    let value = extract_json(reply, ReplySchema::Abstraction).map_err(|e| e.to_string())?;
    let parsed = abstraction_from_value(&value).map_err(|e| e.to_string())?;
    for w in &parsed.warnings {
        log::warn!("abstraction: {w}");
    }
    Ok(parsed.abstraction)
}

pub fn run_step1(caller: &StageCaller<'_>, frames: &[Attachment]) -> Result<VisualAbstraction, StageFailure> {
    caller.ask(Stage::Step1, &BTreeMap::new(), frames, parse_abstraction_reply)
}

fn bullets(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().map(|s| format!("\n- {s}")).collect()
}

/// The seven abstraction fields as prompt text, keyed by placeholder name.
pub fn abstraction_fields(a: &VisualAbstraction) -> BTreeMap<&'static str, String> {
    BTreeMap::from([
        ("scenario", a.scenario.clone()),
        ("visual_elements", bullets(a.visual_elements.iter().cloned())),
        ("objects", bullets(a.objects.iter().map(|o| format!("{} ({})", o.name, o.kind.as_str())))),
        ("static_patterns", bullets(a.static_patterns.iter().cloned())),
        ("dynamic_patterns", bullets(a.dynamic_patterns.iter().cloned())),
        ("core_principles", bullets(a.core_principles.iter().cloned())),
        (
            "interactions",
            bullets(a.interactions.iter().map(|i| {
                let mut line = format!("{}: {}", i.objects_involved.join(", "), i.interaction_type.as_str());
                if !i.interaction_parameters.is_empty() {
                    line.push_str(&format!(" ({})", i.interaction_parameters.join(", ")));
                }
                line
            })),
        ),
    ])
}

/// Draws `min(limit, pool)` examples without replacement; the order of the
/// draw is the order in the prompt.
pub fn sample_examples<'p>(pool: &'p [SeedExample], limit: usize, rng_seed: u64) -> Vec<&'p SeedExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rand::seq::index::sample(&mut rng, pool.len(), limit.min(pool.len())).into_iter().map(|i| &pool[i]).collect()
}

pub fn sketch_examples_block(examples: &[&SeedExample]) -> String {
    examples
        .iter()
        .map(|e| TaskSketch { concepts: e.concepts.clone(), description: e.description.clone() }.to_headers())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn run_step2(
    caller: &StageCaller<'_>,
    abstraction: &VisualAbstraction,
    seed_pool: &[SeedExample],
    rng_seed: u64,
) -> Result<TaskSketch, StageFailure> {
    if seed_pool.is_empty() {
        return Err(StageFailure::EmptySeedPool);
    }
    let mut values = abstraction_fields(abstraction);
    values.insert("examples", sketch_examples_block(&sample_examples(seed_pool, SKETCH_EXAMPLES, rng_seed)));
    caller.ask(Stage::Step2, &values, &[], TaskSketch::parse_headers)
}

fn str_field(v: &Value, key: &str) -> String {
    v[key].as_str().unwrap_or_default().to_string()
}

pub fn parse_program_v1(reply: &str) -> Result<CandidateProgram, String> {
    let v = extract_json(reply, ReplySchema::ProgramV1).map_err(|e| e.to_string())?;
    let program = CandidateProgram {
        library_prelude: str_field(&v, "library"),
        main_source: str_field(&v, "main_code"),
        generate_input_source: str_field(&v, "generate_input_code"),
        total_source: str_field(&v, "total_code"),
    };
    program.check()?;
    Ok(program)
}

pub fn retrieval_examples_block(seeds: &[&SeedExample]) -> String {
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| format!("Example {}:\n```python\n{}\n```", i + 1, s.source.total_source.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn run_step3_v1(
    caller: &StageCaller<'_>,
    sketch: &TaskSketch,
    seed_index: &VectorIndex<SeedExample>,
    embedder: &dyn Embedder,
    common_lib: &str,
) -> Result<CandidateProgram, StageFailure> {
    let hits = query(seed_index, &sketch.description, embedder, RETRIEVAL_K)?;
    let seeds: Vec<&SeedExample> = hits.iter().map(|h| &h.entry.payload).collect();
    let values = BTreeMap::from([
        ("description", sketch.to_headers()),
        ("common_lib", common_lib.to_string()),
        ("examples", retrieval_examples_block(&seeds)),
    ]);
    caller.ask(Stage::Step3, &values, &[], parse_program_v1)
}

pub fn parse_bitmap_seed(object_name: &str, reply: &str) -> Result<ObjectSeed, String> {
    let v = extract_json(reply, ReplySchema::BitmapSeed).map_err(|e| e.to_string())?;
    let string_map = |key: &str| -> BTreeMap<String, String> {
        v[key].as_object().into_iter().flatten().map(|(k, x)| (k.clone(), x.as_str().unwrap_or_default().to_string())).collect()
    };
    let seed = ObjectSeed {
        name: object_name.to_string(),
        kind: ObjectKind::Explicit,
        generator_source: str_field(&v, "function_code"),
        pixel_meaning: string_map("pixel_meaning"),
        parameter_desc: string_map("parameter_desc"),
        embedding: None,
    };
    if seed.function_name().is_none() {
        return Err("function_code defines no function".into());
    }
    Ok(seed)
}

/// The program-v2 reply fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramV2 {
    pub input_bitmap_generation_code: String,
    pub used_concept: String,
    pub solution_code: String,
}

pub fn parse_program_v2(reply: &str) -> Result<ProgramV2, String> {
    let v = extract_json(reply, ReplySchema::ProgramV2).map_err(|e| e.to_string())?;
    let used_concept = match &v["used_concept"] {
        Value::Array(items) => items.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(", "),
        other => other.as_str().unwrap_or_default().to_string(),
    };
    Ok(ProgramV2 {
        input_bitmap_generation_code: str_field(&v, "input_bitmap_generation_code"),
        used_concept,
        solution_code: str_field(&v, "solution_code"),
    })
}

/// True when `code` contains a call `name(`, with `name` not preceded by an
/// identifier character.
pub fn calls_function(code: &str, name: &str) -> bool {
    code.match_indices(name).any(|(i, _)| {
        let before_ok = code[..i].chars().next_back().is_none_or(|c| !(c.is_alphanumeric() || c == '_'));
        before_ok && code[i + name.len()..].trim_start().starts_with('(')
    })
}

fn is_import(line: &str) -> bool {
    line.starts_with("import ") || line.starts_with("from ")
}

/// Turns bitmap generation code into a `generate_input` entry point.
///
/// Code that already defines `generate_input` is kept as is. Otherwise the
/// code becomes the body of `generate_input`, which returns one of the
/// `*_input_bitmap_*` variables the code assigns, chosen by the seeded
/// `random` module. Top-level imports are hoisted out of the body.
pub fn adapt_generator(code: &str) -> (String, String) {
    if defines_function(code, GENERATOR_ENTRY) {
        return (String::new(), code.to_string());
    }
    let mut imports = vec!["import random".to_string()];
    let mut body = String::new();
    for line in code.lines() {
        if is_import(line) {
            if !imports.iter().any(|l| l == line) {
                imports.push(line.to_string());
            }
        } else if line.trim().is_empty() {
            body.push('\n');
        } else {
            body.push_str("    ");
            body.push_str(line);
            body.push('\n');
        }
    }
    let generator = format!(
        "def {GENERATOR_ENTRY}():\n{body}    bitmaps = [value for key, value in sorted(locals().items()) if \"_input_bitmap_\" in key]\n    return random.choice(bitmaps)\n"
    );
    (imports.join("\n"), generator)
}

/// Assembles the runnable program from the pasted seeds and the v2 reply.
pub fn assemble_v2(seeds: &[ObjectSeed], reply: &ProgramV2) -> Result<CandidateProgram, String> {
    let (prelude, generator) = adapt_generator(&reply.input_bitmap_generation_code);
    let mut parts: Vec<&str> = Vec::new();
    if !prelude.is_empty() {
        parts.push(&prelude);
    }
    parts.extend(seeds.iter().map(|s| s.generator_source.trim_end()));
    parts.push(generator.trim_end());
    parts.push(reply.solution_code.trim_end());
    let program = CandidateProgram {
        library_prelude: prelude.clone(),
        main_source: reply.solution_code.clone(),
        generate_input_source: generator.clone(),
        total_source: parts.join("\n\n") + "\n",
    };
    program.check()?;
    Ok(program)
}

/// Result of the second code-generation path.
#[derive(Debug, Clone, PartialEq)]
pub struct V2Output {
    pub program: CandidateProgram,
    pub used_concept: String,
    /// Seeds created by phase 3-1 for objects the store lacked.
    pub new_seeds: Vec<ObjectSeed>,
}

fn story_block(a: &VisualAbstraction) -> String {
    let f = abstraction_fields(a);
    format!(
        "Scenario: {}\nObjects:{}\nChanges:{}\nInteractions:{}",
        f["scenario"], f["objects"], f["dynamic_patterns"], f["interactions"]
    )
}

pub fn run_step3_v2(
    caller: &StageCaller<'_>,
    sketch: &TaskSketch,
    abstraction: &VisualAbstraction,
    object_index: &VectorIndex<ObjectSeed>,
    embedder: &dyn Embedder,
) -> Result<V2Output, StageFailure> {
    let names: Vec<&str> = abstraction.explicit_objects().map(|o| o.name.as_str()).collect();
    if names.is_empty() {
        return Err(StageFailure::NoExplicitObjects);
    }
    // Phase 3-1: only objects without a seed stored under their exact name.
    let mut index = object_index.clone();
    let mut new_seeds = Vec::new();
    for name in &names {
        if index.entries().iter().any(|e| e.key == *name) {
            continue;
        }
        let values = BTreeMap::from([("template", name.to_string())]);
        let mut seed = caller.ask(Stage::Step3_1, &values, &[], |r| parse_bitmap_seed(name, r))?;
        let vector = embedder.embed_one(name)?;
        seed.embedding = Some(vector.clone());
        index.insert(name.to_string(), EmbeddingVector::new(vector, embedder.model_id()), seed.clone())?;
        new_seeds.push(seed);
    }
    // Phase 3-2: paste the closest seed for each object, once per function.
    let mut pasted: Vec<ObjectSeed> = Vec::new();
    for name in &names {
        let (seed, _) = lookup_object_seed(&index, name, embedder)?;
        let function = seed.function_name().ok_or_else(|| StageFailure::SeedWithoutFunction(seed.name.clone()))?;
        if !pasted.iter().any(|p| p.function_name() == Some(function)) {
            pasted.push(seed.clone());
        }
    }
    let seed_text = pasted
        .iter()
        .map(|s| format!("# object: {}\n{}", s.name, s.generator_source.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n");
    let values = BTreeMap::from([
        ("seed", seed_text),
        ("description", sketch.description.clone()),
        ("story", story_block(abstraction)),
    ]);
    let reply = caller.ask(Stage::Step3_2, &values, &[], |r| {
        let reply = parse_program_v2(r)?;
        assemble_v2(&pasted, &reply)?;
        Ok(reply)
    })?;
    for seed in &pasted {
        let function = seed.function_name().expect("checked when pasted");
        if !calls_function(&reply.input_bitmap_generation_code, function) {
            return Err(StageFailure::MissingInvocation(function.to_string()));
        }
    }
    let program = assemble_v2(&pasted, &reply).map_err(|message| StageFailure::Reply { stage: Stage::Step3_2, message })?;
    Ok(V2Output { program, used_concept: reply.used_concept, new_seeds })
}
