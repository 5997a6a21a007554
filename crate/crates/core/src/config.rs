//! The TOML run configuration shared by every subcommand.
//!
//! Relative paths resolve against the directory of the config file (or the
//! working directory when no file is given). Credentials never appear in the
//! file: the provider section names the environment variables to read.
//!
//! ```toml
//! [pipeline]
//! version = "v1"
//! rng_seed = 7
//!
//! [paths]
//! seeds = "fixtures/seeds"
//! common_lib = "python/common.py"
//!
//! [stages.step2]
//! stage = "step2"
//! model_id = "o1"
//! max_tokens = 4096
//! top_p = 1.0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::exec::{ExecutionBudget, RunnerConfig};
use crate::llm::{Gateway, OpenAiProvider, RecordingProvider, ReplayProvider, RetryPolicy, Stage, StageConfig};
use crate::pipeline::{PipelineConfig, PipelineResources, PromptSet, TemplateError, DEFAULT_MAX_FRAMES};
use crate::retrieval::{
    build_index, build_object_index, ApiEmbedder, CachedEmbedder, Embedder, HashingEmbedder, RetrievalError, VectorIndex,
};
use crate::task::{canonical_json, sha256_hex, ObjectSeed, PipelineVersion, SeedExample};
use crate::validate::ValidationConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ConfigError + '_ {
    move |source| ConfigError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub version: PipelineVersion,
    pub rng_seed: u64,
    pub reprompt: u32,
    pub workers: usize,
    pub max_frames: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection { version: PipelineVersion::V1, rng_seed: 0, reprompt: 0, workers: 4, max_frames: DEFAULT_MAX_FRAMES }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Directory of `*.py` seed examples.
    pub seeds: Option<PathBuf>,
    /// Directory of `*.json` object seeds.
    pub object_seeds: Option<PathBuf>,
    pub common_lib: Option<PathBuf>,
    /// Overrides for the builtin prompt templates.
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Openai,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    /// Transcript directory for replay, or for recording live calls.
    pub transcripts: Option<PathBuf>,
    pub api_key_env: String,
    pub api_base_env: String,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub timeout_secs: u64,
}

impl Default for ProviderSection {
    fn default() -> Self {
        ProviderSection {
            kind: ProviderKind::Openai,
            transcripts: None,
            api_key_env: crate::llm::API_KEY_ENV.into(),
            api_base_env: crate::llm::API_BASE_ENV.into(),
            max_in_flight: 8,
            max_attempts: 4,
            timeout_secs: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Hashing,
    Api,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub kind: EmbeddingKind,
    pub dim: usize,
    pub model: String,
    pub cache: Option<PathBuf>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection { kind: EmbeddingKind::Hashing, dim: 256, model: "text-embedding-3-small".into(), cache: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    pub target_pairs: usize,
    pub max_generation_attempts: Option<usize>,
    pub determinism_repeats: usize,
    pub permutation_trials: usize,
    pub fix_background: bool,
    pub per_call_secs: f64,
    pub per_task_secs: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        let v = ValidationConfig::default();
        ValidationSection {
            target_pairs: v.target_pairs,
            max_generation_attempts: None,
            determinism_repeats: v.determinism_repeats,
            permutation_trials: v.permutation_trials,
            fix_background: v.fix_background,
            per_call_secs: v.budget.per_call.as_secs_f64(),
            per_task_secs: v.budget.per_task.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RunnerSection {
    Fake,
    Command { program: PathBuf, #[serde(default)] args: Vec<String> },
}

impl Default for RunnerSection {
    fn default() -> Self {
        RunnerSection::Fake
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pipeline: PipelineSection,
    pub paths: PathsSection,
    pub provider: ProviderSection,
    pub embedding: EmbeddingSection,
    pub validation: ValidationSection,
    pub runner: RunnerSection,
    /// Per-stage overrides; stages not listed keep their defaults.
    pub stages: BTreeMap<Stage, StageConfig>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: "<config>".into(), message: e.to_string() })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Config::parse(&text, &base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.display().to_string(), message },
            other => other,
        })
    }

    /// Defaults with paths relative to `base_dir`.
    pub fn with_base(base_dir: &Path) -> Self {
        Config { base_dir: base_dir.to_path_buf(), ..Config::default() }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        for (stage, sc) in &self.stages {
            if sc.stage != *stage {
                return Err(ConfigError::Invalid(format!("[stages.{stage}] declares stage {}", sc.stage)));
            }
            sc.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        self.validation_config().check().map_err(ConfigError::Invalid)?;
        if self.embedding.dim == 0 {
            return Err(ConfigError::Invalid("embedding.dim must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn secs(s: f64) -> Duration {
        Duration::try_from_secs_f64(s).unwrap_or(Duration::ZERO)
    }

    pub fn validation_config(&self) -> ValidationConfig {
        let v = &self.validation;
        ValidationConfig {
            target_pairs: v.target_pairs,
            max_generation_attempts: v.max_generation_attempts.unwrap_or(3 * v.target_pairs),
            determinism_repeats: v.determinism_repeats,
            permutation_trials: v.permutation_trials,
            fix_background: v.fix_background,
            rng_seed: self.pipeline.rng_seed,
            // The per-call limit never exceeds the task limit.
            budget: ExecutionBudget {
                per_call: Self::secs(v.per_call_secs).min(Self::secs(v.per_task_secs)),
                per_task: Self::secs(v.per_task_secs),
            },
        }
    }

    pub fn runner_config(&self) -> RunnerConfig {
        match &self.runner {
            RunnerSection::Fake => RunnerConfig::Fake,
            RunnerSection::Command { program, args } => {
                RunnerConfig::Command { program: program.clone(), args: args.clone() }
            }
        }
    }

    /// Every stage with its override or default.
    pub fn stage_configs(&self) -> BTreeMap<Stage, StageConfig> {
        Stage::ALL
            .into_iter()
            .map(|s| (s, self.stages.get(&s).cloned().unwrap_or_else(|| StageConfig::default_for(s))))
            .collect()
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            version: self.pipeline.version,
            stages: self.stage_configs(),
            rng_seed: self.pipeline.rng_seed,
            reprompt_budget: self.pipeline.reprompt,
            workers: self.pipeline.workers.max(1),
            validation: self.validation_config(),
            runner: self.runner_config(),
        }
    }

    /// The gateway described by the provider section. With `replay` set,
    /// transcripts in that directory answer every call.
    pub fn gateway(&self, replay: Option<&Path>) -> Gateway {
        let p = &self.provider;
        let replay_dir = replay.map(Path::to_path_buf).or_else(|| match p.kind {
            ProviderKind::Replay => Some(self.resolve(p.transcripts.as_deref().unwrap_or(Path::new("transcripts")))),
            ProviderKind::Openai => None,
        });
        if let Some(dir) = replay_dir {
            return Gateway::with_limits(Arc::new(ReplayProvider::new(dir)), RetryPolicy::none(), p.max_in_flight);
        }
        let base = std::env::var(&p.api_base_env).unwrap_or_else(|_| crate::llm::DEFAULT_API_BASE.into());
        let key = std::env::var(&p.api_key_env).ok();
        let live: Arc<dyn crate::llm::ChatProvider> =
            Arc::new(OpenAiProvider::new(base, key, Duration::from_secs(p.timeout_secs)));
        let provider = match &p.transcripts {
            Some(dir) => match RecordingProvider::new(live.clone(), self.resolve(dir)) {
                Ok(r) => Arc::new(r) as Arc<dyn crate::llm::ChatProvider>,
                Err(e) => {
                    log::warn!("not recording transcripts: {e}");
                    live
                }
            },
            None => live,
        };
        let retry = RetryPolicy { max_attempts: p.max_attempts.max(1), ..RetryPolicy::default() };
        Gateway::with_limits(provider, retry, p.max_in_flight)
    }

    pub fn embedder(&self) -> Result<Box<dyn Embedder>, ConfigError> {
        let e = &self.embedding;
        let inner: Box<dyn Embedder> = match e.kind {
            EmbeddingKind::Hashing => Box::new(HashingEmbedder::new(e.dim)),
            EmbeddingKind::Api => {
                let api = ApiEmbedder::from_env(e.model.clone(), Duration::from_secs(self.provider.timeout_secs));
                match &e.cache {
                    Some(path) => Box::new(CachedEmbedder::open(api, self.resolve(path))?),
                    None => Box::new(api),
                }
            }
        };
        Ok(inner)
    }

    pub fn prompts(&self) -> Result<PromptSet, ConfigError> {
        Ok(match &self.paths.prompts {
            Some(dir) => PromptSet::load_dir(&self.resolve(dir))?,
            None => PromptSet::builtin(),
        })
    }

    pub fn seed_examples(&self) -> Result<Vec<SeedExample>, ConfigError> {
        match &self.paths.seeds {
            Some(dir) => {
                let dir = self.resolve(dir);
                SeedExample::load_dir(&dir).map_err(io_err(&dir))
            }
            None => Ok(Vec::new()),
        }
    }

    pub fn object_seeds(&self) -> Result<Vec<ObjectSeed>, ConfigError> {
        let Some(dir) = &self.paths.object_seeds else { return Ok(Vec::new()) };
        let dir = self.resolve(dir);
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(io_err(p))?;
                let doc: Value = serde_json::from_slice(&bytes)
                    .map_err(|e| ConfigError::Parse { path: p.display().to_string(), message: e.to_string() })?;
                ObjectSeed::from_value(&doc)
                    .map_err(|e| ConfigError::Parse { path: p.display().to_string(), message: e.to_string() })
            })
            .collect()
    }

    pub fn common_lib(&self) -> Result<String, ConfigError> {
        match &self.paths.common_lib {
            Some(p) => {
                let p = self.resolve(p);
                std::fs::read_to_string(&p).map_err(io_err(&p))
            }
            None => Ok(String::new()),
        }
    }

    /// The effective configuration as JSON, with stage defaults filled in.
    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["stages"] = Value::Object(
            self.stage_configs().into_iter().map(|(s, c)| (s.as_str().to_string(), c.to_json())).collect(),
        );
        v
    }

    /// SHA-256 of the canonical effective configuration.
    pub fn digest(&self) -> String {
        sha256_hex(&canonical_json(&self.to_json()))
    }
}

/// Everything the pipeline reads, loaded once from a [`Config`].
pub struct Resources {
    pub prompts: PromptSet,
    pub embedder: Box<dyn Embedder>,
    pub seed_pool: Vec<SeedExample>,
    pub seed_index: VectorIndex<SeedExample>,
    pub object_index: VectorIndex<ObjectSeed>,
    pub common_lib: String,
}

impl Resources {
    pub fn load(cfg: &Config) -> Result<Self, ConfigError> {
        let embedder = cfg.embedder()?;
        let seed_pool = cfg.seed_examples()?;
        let seed_index = build_index(seed_pool.clone(), embedder.as_ref())?;
        let object_index = build_object_index(cfg.object_seeds()?, embedder.as_ref())?;
        Ok(Resources {
            prompts: cfg.prompts()?,
            seed_pool,
            seed_index,
            object_index,
            common_lib: cfg.common_lib()?,
            embedder,
        })
    }

    pub fn bind<'a>(&'a self, gateway: &'a Gateway) -> PipelineResources<'a> {
        PipelineResources {
            gateway,
            prompts: &self.prompts,
            embedder: self.embedder.as_ref(),
            seed_pool: &self.seed_pool,
            seed_index: &self.seed_index,
            object_index: &self.object_index,
            common_lib: &self.common_lib,
        }
    }
}
