//! The `arcforge` command line.
//!
//! Every subcommand prints one JSON document to stdout and logs to stderr.
//! Exit codes: 0 success, 1 a check failed (rejected candidate, failed
//! source, digest mismatch), 2 usage, configuration or I/O error. Commands
//! that write files also write a [`RunManifest`] next to their outputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::abstraction::{parse_abstraction, VisualAbstraction};
use crate::analytics::{
    classify_types, dataset_stats, embed_similarity, judge_similarity, load_dataset, StdEstimator, TypeHistogram,
};
use crate::config::{Config, Resources};
use crate::exec::fake;
use crate::llm::{Gateway, StageConfig};
use crate::metrics::{complexity_report, ComplexityReport};
use crate::pipeline::stages::{run_step1, run_step2};
use crate::pipeline::{
    load_sources, run_pipeline, source_seed, write_run, GifSource, SourceOrigin, StageCaller, ABSTRACTIONS_DIR,
    MANIFEST_FILE,
};
use crate::task::{
    canonical_json, parse_task_file, read_manifest, serialize_task_file, sha256_hex, Candidate,
    PipelineVersion, TaskPairs,
};
use crate::validate::{validate_candidate, FilterOutcome};

/// File name of the run manifest inside an output directory.
pub const RUN_MANIFEST_FILE: &str = "run.json";
pub const SKETCHES_DIR: &str = "sketches";

#[derive(Debug, Parser)]
#[command(name = "arcforge", version, about = "Synthesize, validate and analyze analogy-grounded grid tasks")]
struct Cli {
    /// TOML configuration; relative paths in it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Answer every model call from recorded transcripts in this directory.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Re-prompts allowed after an unparseable reply.
    #[arg(long)]
    reprompt: Option<u32>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    rng_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VersionArg {
    V1,
    V2,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Describe each GIF source as a visual abstraction.
    Abstract {
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Turn abstraction files into task sketches.
    Sketch {
        /// Directory of abstraction JSON files.
        #[arg(long)]
        abstractions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run the whole pipeline and write validated tasks.
    Synthesize {
        #[arg(long, value_enum)]
        version: Option<VersionArg>,
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Validate one candidate file; exits 1 unless it passes.
    Validate {
        candidate: PathBuf,
        /// Whole-task execution budget in seconds.
        #[arg(long)]
        budget_secs: Option<u64>,
        /// Number of pairs to generate.
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        rng_seed: Option<u64>,
        /// Write the accepted task file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complexity metrics of a Python program, task file or candidate.
    Metrics { file: PathBuf },
    /// Grid and color statistics over a directory of task files.
    Stats {
        dataset: PathBuf,
        /// Use the N-1 estimator for standard deviations.
        #[arg(long)]
        sample_std: bool,
        /// Classify task types and write a `type,count` CSV here.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Score candidate analogies against ground truth, one per line.
    EvalAnalogy {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        /// Also ask the judge model for a score.
        #[arg(long)]
        judge: bool,
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Verify a synthesized run against its manifest and write plain
    /// `{train, test}` task files.
    Export {
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the scripted test runner on stdio.
    #[command(hide = true)]
    FakeRunner,
}

/// Provenance of one mutating command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_digest: String,
    pub rng_seed: u64,
    pub stage_configs: Vec<Value>,
    pub started_unix: u64,
    pub finished_unix: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<Value>,
    /// SHA-256 of every output file, keyed by path relative to the output
    /// directory.
    pub outputs: BTreeMap<String, String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn files_under(dir: &Path, base: &Path, out: &mut BTreeMap<String, String>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            files_under(&path, base, out)?;
        } else {
            let rel = path.strip_prefix(base).expect("under base").to_string_lossy().replace('\\', "/");
            if rel != RUN_MANIFEST_FILE {
                out.insert(rel, sha256_hex(&std::fs::read(&path)?));
            }
        }
    }
    Ok(())
}

struct Invocation {
    argv: Vec<String>,
    config: Config,
    started: u64,
}

impl Invocation {
    fn write_manifest(&self, out: &Path, fidelity: Option<Value>) -> anyhow::Result<()> {
        let mut outputs = BTreeMap::new();
        files_under(out, out, &mut outputs).with_context(|| format!("hashing {}", out.display()))?;
        let manifest = RunManifest {
            command_line: self.argv.clone(),
            config_digest: self.config.digest(),
            rng_seed: self.config.pipeline.rng_seed,
            stage_configs: self.config.stage_configs().values().map(StageConfig::to_json).collect(),
            started_unix: self.started,
            finished_unix: unix_now(),
            fidelity,
            outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("plain data");
        std::fs::write(out.join(RUN_MANIFEST_FILE), text + "\n").with_context(|| format!("writing run manifest in {}", out.display()))
    }

    fn apply_model_args(&mut self, m: &ModelArgs) {
        let p = &mut self.config.pipeline;
        if let Some(r) = m.reprompt {
            p.reprompt = r;
        }
        if let Some(w) = m.workers {
            p.workers = w.max(1);
        }
        if let Some(s) = m.rng_seed {
            p.rng_seed = s;
        }
    }
}

fn print_json(v: &Value) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(v).expect("plain data"));
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("ARCFORGE_LOG").try_init();
    match run(cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<i32> {
    if let Command::FakeRunner = cli.command {
        let cancel = AtomicBool::new(false);
        fake::serve(std::io::stdin().lock(), std::io::stdout().lock(), &cancel)?;
        return Ok(0);
    }
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::with_base(&std::env::current_dir()?),
    };
    let mut ctx = Invocation { argv, config, started: unix_now() };
    match cli.command {
        Command::Abstract { sources, out, model } => {
            ctx.apply_model_args(&model);
            cmd_abstract(&ctx, &sources, &out, model.replay.as_deref())
        }
        Command::Sketch { abstractions, out, model } => {
            ctx.apply_model_args(&model);
            cmd_sketch(&ctx, &abstractions, &out, model.replay.as_deref())
        }
        Command::Synthesize { version, sources, out, model } => {
            ctx.apply_model_args(&model);
            if let Some(v) = version {
                ctx.config.pipeline.version = match v {
                    VersionArg::V1 => PipelineVersion::V1,
                    VersionArg::V2 => PipelineVersion::V2,
                };
            }
            cmd_synthesize(&ctx, &sources, &out, model.replay.as_deref())
        }
        Command::Validate { candidate, budget_secs, pairs, rng_seed, out } => {
            if let Some(s) = rng_seed {
                ctx.config.pipeline.rng_seed = s;
            }
            cmd_validate(&ctx, &candidate, budget_secs, pairs, out.as_deref())
        }
        Command::Metrics { file } => cmd_metrics(&file),
        Command::Stats { dataset, sample_std, histogram, replay } => {
            cmd_stats(&ctx, &dataset, sample_std, histogram.as_deref(), replay.as_deref())
        }
        Command::EvalAnalogy { candidates, ground_truth, judge, replay } => {
            cmd_eval_analogy(&ctx, &candidates, &ground_truth, judge, replay.as_deref())
        }
        Command::Export { run, out } => cmd_export(&ctx, &run, &out),
        Command::FakeRunner => unreachable!("handled above"),
    }
}

fn worker_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool")
}

fn cmd_abstract(ctx: &Invocation, sources: &Path, out: &Path, replay: Option<&Path>) -> anyhow::Result<i32> {
    let cfg = &ctx.config;
    let sources = load_sources(sources, cfg.pipeline.max_frames)?;
    let gateway = cfg.gateway(replay);
    let prompts = cfg.prompts()?;
    let stages = cfg.stage_configs();
    let caller = StageCaller { gateway: &gateway, prompts: &prompts, configs: &stages, reprompt_budget: cfg.pipeline.reprompt };
    let results: Vec<(String, Result<VisualAbstraction, String>)> = worker_pool(cfg.pipeline.workers).install(|| {
        sources
            .par_iter()
            .map(|s| {
                let r = match &s.origin {
                    SourceOrigin::Precomputed(a) => Ok(a.clone()),
                    SourceOrigin::LocalFile(_) => run_step1(&caller, &s.frames).map_err(|e| e.to_string()),
                };
                (s.id.clone(), r)
            })
            .collect()
    });
    let dir = out.join(ABSTRACTIONS_DIR);
    std::fs::create_dir_all(&dir)?;
    let mut report = Vec::new();
    let mut failed = 0;
    for (id, r) in &results {
        match r {
            Ok(a) => {
                std::fs::write(dir.join(format!("{id}.json")), canonical_json(&a.to_json()))?;
                report.push(json!({"source_id": id, "ok": true}));
            }
            Err(e) => {
                failed += 1;
                log::warn!("{id}: {e}");
                report.push(json!({"source_id": id, "ok": false, "error": e}));
            }
        }
    }
    ctx.write_manifest(out, None)?;
    print_json(&json!({"sources": report, "failed": failed}));
    Ok(i32::from(failed > 0))
}

fn read_abstractions(dir: &Path) -> anyhow::Result<Vec<(String, VisualAbstraction)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let parsed = parse_abstraction(&std::fs::read(p)?).with_context(|| format!("{}", p.display()))?;
            Ok((id, parsed.abstraction))
        })
        .collect()
}

fn cmd_sketch(ctx: &Invocation, abstractions: &Path, out: &Path, replay: Option<&Path>) -> anyhow::Result<i32> {
    let cfg = &ctx.config;
    // Accept either a directory of abstractions or the output of `abstract`.
    let nested = abstractions.join(ABSTRACTIONS_DIR);
    let inputs = read_abstractions(if nested.is_dir() { &nested } else { abstractions })?;
    let gateway = cfg.gateway(replay);
    let prompts = cfg.prompts()?;
    let stages = cfg.stage_configs();
    let pool = cfg.seed_examples()?;
    let caller = StageCaller { gateway: &gateway, prompts: &prompts, configs: &stages, reprompt_budget: cfg.pipeline.reprompt };
    let rng_seed = cfg.pipeline.rng_seed;
    let results: Vec<_> = worker_pool(cfg.pipeline.workers).install(|| {
        inputs
            .par_iter()
            .map(|(id, a)| (id, run_step2(&caller, a, &pool, source_seed(rng_seed, id, "sketch_examples"))))
            .collect()
    });
    let dir = out.join(SKETCHES_DIR);
    std::fs::create_dir_all(&dir)?;
    let mut report = Vec::new();
    let mut failed = 0;
    for (id, r) in results {
        match r {
            Ok(s) => {
                std::fs::write(dir.join(format!("{id}.txt")), s.to_headers())?;
                report.push(json!({"source_id": id, "ok": true, "concepts": s.concepts}));
            }
            Err(e) => {
                failed += 1;
                log::warn!("{id}: {e}");
                report.push(json!({"source_id": id, "ok": false, "error": e.to_string()}));
            }
        }
    }
    ctx.write_manifest(out, None)?;
    print_json(&json!({"sketches": report, "failed": failed}));
    Ok(i32::from(failed > 0))
}

fn cmd_synthesize(ctx: &Invocation, sources: &Path, out: &Path, replay: Option<&Path>) -> anyhow::Result<i32> {
    let cfg = &ctx.config;
    let sources: Vec<GifSource> = load_sources(sources, cfg.pipeline.max_frames)?;
    let gateway: Gateway = cfg.gateway(replay);
    let resources = Resources::load(cfg)?;
    let run = run_pipeline(&sources, &resources.bind(&gateway), &cfg.pipeline_config());
    let entries = write_run(&run, out).with_context(|| format!("writing {}", out.display()))?;
    let fidelity = run.fidelity.to_json();
    ctx.write_manifest(out, Some(fidelity.clone()))?;
    print_json(&json!({
        "tasks": entries.iter().map(|e| &e.id).collect::<Vec<_>>(),
        "fidelity": fidelity,
        "outcomes": run.outcomes.iter().map(|o| o.to_json()).collect::<Vec<_>>(),
    }));
    Ok(0)
}

fn cmd_validate(
    ctx: &Invocation,
    path: &Path,
    budget_secs: Option<u64>,
    pairs: Option<usize>,
    out: Option<&Path>,
) -> anyhow::Result<i32> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let candidate = Candidate::parse(&bytes).with_context(|| format!("{}", path.display()))?;
    let mut vcfg = ctx.config.validation_config();
    if let Some(k) = pairs {
        vcfg = vcfg.with_pairs(k);
    }
    if let Some(s) = budget_secs {
        vcfg = vcfg.with_budget_secs(s);
    }
    if let Err(e) = vcfg.check() {
        bail!("invalid validation settings: {e}");
    }
    let validation = validate_candidate(&candidate, &ctx.config.runner_config(), &vcfg, None);
    let verdict = validation.verdict();
    if let (Some(task), Some(out)) = (validation.task(), out) {
        std::fs::write(out, serialize_task_file(task)).with_context(|| format!("writing {}", out.display()))?;
    }
    print_json(&json!({
        "id": candidate.id,
        "outcome": verdict.outcome.as_str(),
        "detail": verdict.detail,
        "metrics": validation.task().and_then(|t| t.metrics),
    }));
    Ok(i32::from(verdict.outcome != FilterOutcome::Pass))
}

fn cmd_metrics(path: &Path) -> anyhow::Result<i32> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let report: ComplexityReport = if path.extension().is_some_and(|e| e == "py") {
        ComplexityReport::of_source(std::str::from_utf8(&bytes)?)?
    } else {
        match parse_task_file(&bytes) {
            Ok(task) => complexity_report(&task.solution)?,
            Err(task_err) => {
                let c = Candidate::parse(&bytes)
                    .map_err(|_| anyhow::anyhow!("{}: neither a task nor a candidate: {task_err}", path.display()))?;
                complexity_report(&c.program)?
            }
        }
    };
    print_json(&serde_json::to_value(report).expect("plain data"));
    Ok(0)
}

fn cmd_stats(
    ctx: &Invocation,
    dataset: &Path,
    sample_std: bool,
    histogram: Option<&Path>,
    replay: Option<&Path>,
) -> anyhow::Result<i32> {
    let tasks = load_dataset(dataset)?;
    let estimator = if sample_std { StdEstimator::Sample } else { StdEstimator::Population };
    let stats = dataset_stats(tasks.iter().map(|t| t.pairs()), estimator)?;
    let mut report = serde_json::to_value(&stats).expect("plain data");
    report["estimator"] = json!(if sample_std { "sample" } else { "population" });
    if let Some(csv) = histogram {
        let cfg = &ctx.config;
        let gateway = cfg.gateway(replay);
        let prompts = cfg.prompts()?;
        let stages = cfg.stage_configs();
        let caller = StageCaller { gateway: &gateway, prompts: &prompts, configs: &stages, reprompt_budget: cfg.pipeline.reprompt };
        let labels: Vec<_> = worker_pool(cfg.pipeline.workers).install(|| {
            tasks.par_iter().map(|t| (t.id().to_string(), classify_types(t.keywords(), &caller))).collect()
        });
        let mut h = TypeHistogram::default();
        let mut unclassified = Vec::new();
        for (id, r) in labels {
            match r {
                Ok(l) => h.add(&l),
                Err(e) => {
                    log::warn!("{id}: not classified: {e}");
                    unclassified.push(id);
                }
            }
        }
        std::fs::write(csv, h.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
        report["types"] = h.to_json();
        report["unclassified"] = json!(unclassified);
    }
    print_json(&report);
    Ok(0)
}

fn read_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn cmd_eval_analogy(
    ctx: &Invocation,
    candidates: &Path,
    ground_truth: &Path,
    judge: bool,
    replay: Option<&Path>,
) -> anyhow::Result<i32> {
    let cands = read_lines(candidates)?;
    let truth = read_lines(ground_truth)?;
    if cands.len() != truth.len() {
        bail!("{} candidates but {} ground-truth lines", cands.len(), truth.len());
    }
    let cfg = &ctx.config;
    let embedder = cfg.embedder()?;
    let gateway = cfg.gateway(replay);
    let prompts = cfg.prompts()?;
    let stages = cfg.stage_configs();
    let caller = StageCaller { gateway: &gateway, prompts: &prompts, configs: &stages, reprompt_budget: cfg.pipeline.reprompt };
    let mut rows = Vec::new();
    let (mut embeds, mut judged) = (Vec::new(), Vec::new());
    let mut failures = 0;
    for (i, (c, t)) in cands.iter().zip(&truth).enumerate() {
        let e = embed_similarity(c, t, embedder.as_ref())?;
        embeds.push(e);
        let mut row = json!({"index": i, "embedding": e});
        if judge {
            match judge_similarity(c, t, &caller) {
                Ok(s) => {
                    judged.push(s);
                    row["judge"] = json!(s);
                }
                Err(e) => {
                    failures += 1;
                    log::warn!("pair {i}: judge failed: {e}");
                    row["judge_error"] = json!(e.to_string());
                }
            }
        }
        rows.push(row);
    }
    print_json(&json!({
        "pairs": rows,
        "mean_embedding": mean(&embeds),
        "mean_judge": mean(&judged),
        "judge_failures": failures,
    }));
    Ok(i32::from(failures > 0))
}

fn cmd_export(ctx: &Invocation, run: &Path, out: &Path) -> anyhow::Result<i32> {
    let manifest_path = run.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let entries = read_manifest(&text)?;
    std::fs::create_dir_all(out)?;
    let mut mismatched = Vec::new();
    let mut exported = Vec::new();
    for e in &entries {
        let bytes = std::fs::read(run.join(&e.path)).with_context(|| format!("reading {}", e.path))?;
        if sha256_hex(&bytes) != e.digest {
            log::error!("{}: digest does not match the manifest", e.path);
            mismatched.push(e.path.clone());
            continue;
        }
        let task = parse_task_file(&bytes).with_context(|| e.path.clone())?;
        std::fs::write(out.join(format!("{}.json", task.id)), canonical_json(&plain_json(&task.pairs)))?;
        exported.push(task.id);
    }
    ctx.write_manifest(out, None)?;
    print_json(&json!({"exported": exported, "digest_mismatches": mismatched}));
    Ok(i32::from(!mismatched.is_empty()))
}

fn plain_json(pairs: &TaskPairs) -> Value {
    json!({
        "train": pairs.train.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        "test": pairs.test.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
    })
}
