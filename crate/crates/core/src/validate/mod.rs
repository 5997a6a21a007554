//! The quality gate between generated candidate programs and accepted
//! tasks.
//!
//! [`validate_candidate`] loads a candidate into a runner session and keeps
//! drawing inputs until it has `K` distinct valid pairs. Checks run in a
//! fixed fail-fast order and the first failure is the verdict:
//!
//! 1. the generated input is well-formed
//! 2. the input is not a duplicate (duplicates are redrawn, not fatal,
//!    until the attempt cap runs out)
//! 3. the output is well-formed
//! 4. the output is not all black
//! 5. `main` is deterministic on the input
//! 6. `main` commutes with color permutations
//! 7. at least one pair has input different from output
//!
//! Timeouts anywhere yield `Timeout`. Load failures, exceptions outside the
//! permutation check and runner faults yield `EntryPointError`.

mod fidelity;
mod verdict;

use std::collections::HashSet;
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use fidelity::{fidelity_accumulate, FidelityReport, FidelityStage, Rate};
pub use verdict::{FilterOutcome, FilterVerdict, VerdictTally};

use crate::exec::{spawn_runner, ExecutionBudget, RunFailure, RunnerConfig, Session};
use crate::grid::{apply_color_permutation, grid_hash, Color, ColorPermutation, Grid, GridDigest, GridRole};
use crate::metrics::complexity_report;
use crate::task::{ArcTask, Candidate, GridPair};

/// Knobs of the quality gate.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig {
    /// Distinct pairs a task needs (`K`); the last becomes the test pair.
    pub target_pairs: usize,
    /// Cap on `generate_input` calls per candidate.
    pub max_generation_attempts: usize,
    /// Total runs of `main` per input in the determinism check.
    pub determinism_repeats: usize,
    /// Random color permutations tried per pair (`R`).
    pub permutation_trials: usize,
    /// Keep color 0 fixed in sampled permutations.
    pub fix_background: bool,
    /// Root of all generator seeds and permutation draws.
    pub rng_seed: u64,
    pub budget: ExecutionBudget,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            target_pairs: 4,
            max_generation_attempts: 12,
            determinism_repeats: 2,
            permutation_trials: 3,
            fix_background: true,
            rng_seed: 0,
            budget: ExecutionBudget::default(),
        }
    }
}

impl ValidationConfig {
    /// Sets `K` and the attempt cap to `3K`.
    pub fn with_pairs(mut self, k: usize) -> Self {
        self.target_pairs = k;
        self.max_generation_attempts = 3 * k;
        self
    }

    pub fn with_budget_secs(mut self, secs: u64) -> Self {
        self.budget = ExecutionBudget::with_task_limit(Duration::from_secs(secs));
        self
    }

    pub fn check(&self) -> Result<(), String> {
        if self.target_pairs < 2 {
            return Err("target_pairs must be at least 2 (one train and one test pair)".into());
        }
        if self.max_generation_attempts < self.target_pairs {
            return Err("max_generation_attempts must be at least target_pairs".into());
        }
        if self.determinism_repeats < 2 {
            return Err("determinism_repeats must be at least 2".into());
        }
        if self.permutation_trials < 1 {
            return Err("permutation_trials must be at least 1".into());
        }
        self.budget.check()
    }
}

/// SHA-256 over the length-prefixed tag, run seed, id and index; first 8
/// bytes little-endian.
pub(crate) fn derive_seed(tag: &str, rng_seed: u64, task_id: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    for part in [tag.as_bytes(), &rng_seed.to_le_bytes(), task_id.as_bytes(), &index.to_le_bytes()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("32-byte digest"))
}

/// Seed passed to `generate_input` on attempt `attempt` (0-based).
pub fn generator_seed(rng_seed: u64, task_id: &str, attempt: u64) -> u64 {
    derive_seed("generate_input", rng_seed, task_id, attempt)
}

/// RNG for the permutations tried on pair `pair_index`.
pub fn permutation_rng(rng_seed: u64, task_id: &str, pair_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed("color_permutation", rng_seed, task_id, pair_index))
}

/// Draws `n` permutations.
pub fn sample_permutations<R: Rng + ?Sized>(rng: &mut R, n: usize, fix_background: bool) -> Vec<ColorPermutation> {
    (0..n).map(|_| ColorPermutation::random(rng, fix_background)).collect()
}

/// Maps a failed call outside the permutation check to its verdict.
fn failure_verdict(f: RunFailure, context: &str) -> FilterVerdict {
    match f {
        RunFailure::Timeout => FilterVerdict::new(FilterOutcome::Timeout, format!("{context}: exceeded the budget")),
        RunFailure::Exception { kind, message } => {
            FilterVerdict::new(FilterOutcome::EntryPointError, format!("{context}: {kind:?}: {message}"))
        }
        RunFailure::NotWellFormed { role: GridRole::Input, verdict } => {
            FilterVerdict::new(FilterOutcome::NonWellFormedInput, format!("{context}: {verdict}"))
        }
        RunFailure::NotWellFormed { role: GridRole::Output, verdict } => {
            FilterVerdict::new(FilterOutcome::NonWellFormedOutput, format!("{context}: {verdict}"))
        }
        RunFailure::Session(e) => FilterVerdict::new(FilterOutcome::EntryPointError, format!("{context}: {e}")),
    }
}

/// `BlackOutput` iff every cell is 0.
pub fn check_black_output(output: &Grid) -> Result<(), FilterVerdict> {
    if output.is_all(Color::new(0).expect("black")) {
        return Err(FilterVerdict::new(
            FilterOutcome::BlackOutput,
            format!("{}x{} output is all black", output.height(), output.width()),
        ));
    }
    Ok(())
}

/// `DuplicateInput` iff the input's digest is already in `seen`; otherwise
/// records it.
pub fn check_duplicate_input(input: &Grid, seen: &mut HashSet<GridDigest>) -> Result<(), FilterVerdict> {
    let digest = grid_hash(input);
    if !seen.insert(digest) {
        return Err(FilterVerdict::new(FilterOutcome::DuplicateInput, format!("input {digest} was already generated")));
    }
    Ok(())
}

/// `Identity` iff every pair maps its input to itself.
pub fn check_identity(pairs: &[GridPair]) -> Result<(), FilterVerdict> {
    if !pairs.is_empty() && pairs.iter().all(|p| p.input == p.output) {
        return Err(FilterVerdict::new(
            FilterOutcome::Identity,
            format!("all {} pairs have output equal to input", pairs.len()),
        ));
    }
    Ok(())
}

/// Runs `main` on `input` until it has run `determinism_repeats` times in
/// total, `reference` being the first run, and requires identical results.
pub fn check_determinism(
    session: &mut Session,
    input: &Grid,
    reference: &Grid,
    cfg: &ValidationConfig,
) -> Result<(), FilterVerdict> {
    for run in 2..=cfg.determinism_repeats {
        let again = session.run_main(input, &cfg.budget).map_err(|f| failure_verdict(f, &format!("main run {run}")))?;
        if &again != reference {
            return Err(FilterVerdict::new(
                FilterOutcome::NonDeterministic,
                format!("main run {run} differs from run 1 on the same input"),
            ));
        }
    }
    Ok(())
}

/// Requires `main(p(input)) == p(expected)` for every permutation `p`.
///
/// The three ways to fail (an exception, an ill-formed result, a different
/// result) are all `NonColorInvariant`; a timeout stays `Timeout`.
pub fn check_color_invariance_with(
    session: &mut Session,
    input: &Grid,
    expected: &Grid,
    permutations: &[ColorPermutation],
    budget: &ExecutionBudget,
) -> Result<(), FilterVerdict> {
    let nci = |detail: String| FilterVerdict::new(FilterOutcome::NonColorInvariant, detail);
    for (i, p) in permutations.iter().enumerate() {
        let permuted = apply_color_permutation(input, p);
        let got = match session.run_main(&permuted, budget) {
            Ok(g) => g,
            Err(RunFailure::Timeout) => {
                return Err(FilterVerdict::new(FilterOutcome::Timeout, format!("permutation {i} ({p}): exceeded the budget")))
            }
            Err(RunFailure::Exception { kind, message }) => {
                return Err(nci(format!("permutation {i} ({p}): execution failed: {kind:?}: {message}")))
            }
            Err(RunFailure::NotWellFormed { verdict, .. }) => {
                return Err(nci(format!("permutation {i} ({p}): ill-formed output: {verdict}")))
            }
            Err(RunFailure::Session(e)) => {
                return Err(FilterVerdict::new(FilterOutcome::EntryPointError, format!("permutation {i} ({p}): {e}")))
            }
        };
        let want = apply_color_permutation(expected, p);
        if got != want {
            return Err(nci(format!("permutation {i} ({p}): output mismatch")));
        }
    }
    Ok(())
}

/// Samples `R` permutations from `rng` and checks them.
pub fn check_color_invariance<R: Rng + ?Sized>(
    session: &mut Session,
    input: &Grid,
    expected: &Grid,
    cfg: &ValidationConfig,
    rng: &mut R,
) -> Result<(), FilterVerdict> {
    let perms = sample_permutations(rng, cfg.permutation_trials, cfg.fix_background);
    check_color_invariance_with(session, input, expected, &perms, &cfg.budget)
}

/// Input digests shared across tasks, with atomic all-or-nothing insertion.
#[derive(Debug, Default)]
pub struct DigestSet {
    inner: Mutex<HashSet<GridDigest>>,
}

impl DigestSet {
    pub fn new() -> Self {
        DigestSet::default()
    }

    /// Inserts every digest if none is present yet; otherwise inserts
    /// nothing and returns the index of the first one already present.
    pub fn insert_all_if_fresh(&self, digests: &[GridDigest]) -> Result<(), usize> {
        let mut set = self.inner.lock().expect("digest set poisoned");
        if let Some(i) = digests.iter().position(|d| set.contains(d)) {
            return Err(i);
        }
        set.extend(digests.iter().copied());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("digest set poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Result of validating one candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum Validation {
    Accepted(Box<ArcTask>),
    Rejected(FilterVerdict),
}

impl Validation {
    pub fn outcome(&self) -> FilterOutcome {
        match self {
            Validation::Accepted(_) => FilterOutcome::Pass,
            Validation::Rejected(v) => v.outcome,
        }
    }

    pub fn verdict(&self) -> FilterVerdict {
        match self {
            Validation::Accepted(t) => FilterVerdict::pass(format!("{} pairs", t.pairs.len())),
            Validation::Rejected(v) => v.clone(),
        }
    }

    pub fn task(&self) -> Option<&ArcTask> {
        match self {
            Validation::Accepted(t) => Some(t),
            Validation::Rejected(_) => None,
        }
    }
}

/// Validates one candidate in a fresh runner session.
///
/// `shared` enables the dataset-wide duplicate pass: an accepted task's
/// inputs must all be new to the set, and are then added to it.
pub fn validate_candidate(
    candidate: &Candidate,
    runner: &RunnerConfig,
    cfg: &ValidationConfig,
    shared: Option<&DigestSet>,
) -> Validation {
    match run_gate(candidate, runner, cfg, shared) {
        Ok(pairs) => {
            let metrics = match complexity_report(&candidate.program) {
                Ok(m) => Some(m),
                Err(e) => {
                    log::warn!("{}: metrics unavailable: {e}", candidate.id);
                    None
                }
            };
            Validation::Accepted(Box::new(candidate.clone().into_task(pairs, metrics)))
        }
        Err(v) => Validation::Rejected(v),
    }
}

fn run_gate(
    candidate: &Candidate,
    runner: &RunnerConfig,
    cfg: &ValidationConfig,
    shared: Option<&DigestSet>,
) -> Result<Vec<GridPair>, FilterVerdict> {
    let id = candidate.id.as_str();
    let mut session = spawn_runner(runner)
        .map_err(|e| FilterVerdict::new(FilterOutcome::EntryPointError, format!("runner failed to start: {e}")))?;
    session.load(&candidate.program.total_source, &cfg.budget).map_err(|f| failure_verdict(f, "load"))?;

    let mut pairs: Vec<GridPair> = Vec::with_capacity(cfg.target_pairs);
    let mut seen = HashSet::new();
    let mut attempts = 0usize;
    let mut duplicates = 0usize;
    while pairs.len() < cfg.target_pairs && attempts < cfg.max_generation_attempts {
        let attempt = attempts;
        attempts += 1;
        let input = session
            .run_generate_input(generator_seed(cfg.rng_seed, id, attempt as u64), &cfg.budget)
            .map_err(|f| failure_verdict(f, &format!("attempt {attempts}: generate_input")))?;
        if check_duplicate_input(&input, &mut seen).is_err() {
            duplicates += 1;
            continue;
        }
        let pair_no = pairs.len() + 1;
        let output = session.run_main(&input, &cfg.budget).map_err(|f| failure_verdict(f, &format!("pair {pair_no}: main")))?;
        check_black_output(&output).map_err(|v| prefix(v, pair_no))?;
        check_determinism(&mut session, &input, &output, cfg).map_err(|v| prefix(v, pair_no))?;
        let mut rng = permutation_rng(cfg.rng_seed, id, pairs.len() as u64);
        check_color_invariance(&mut session, &input, &output, cfg, &mut rng).map_err(|v| prefix(v, pair_no))?;
        pairs.push(GridPair { input, output });
    }
    if pairs.len() < cfg.target_pairs {
        return Err(FilterVerdict::new(
            FilterOutcome::DuplicateInput,
            format!(
                "{} distinct inputs of {} after {attempts} attempts ({duplicates} duplicates)",
                pairs.len(),
                cfg.target_pairs
            ),
        ));
    }
    check_identity(&pairs)?;
    if let Some(set) = shared {
        let digests: Vec<GridDigest> = pairs.iter().map(|p| grid_hash(&p.input)).collect();
        set.insert_all_if_fresh(&digests).map_err(|i| {
            FilterVerdict::new(FilterOutcome::DuplicateInput, format!("pair {}: input already used by another task", i + 1))
        })?;
    }
    session.shutdown();
    Ok(pairs)
}

fn prefix(mut v: FilterVerdict, pair_no: usize) -> FilterVerdict {
    v.detail = format!("pair {pair_no}: {}", v.detail);
    v
}

/// Validates candidates on a pool of `workers` threads. Results keep the
/// order of `candidates`.
pub fn validate_batch(
    candidates: &[Candidate],
    runner: &RunnerConfig,
    cfg: &ValidationConfig,
    workers: usize,
    shared: Option<&DigestSet>,
) -> Vec<Validation> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    pool.install(|| candidates.par_iter().map(|c| validate_candidate(c, runner, cfg, shared)).collect())
}
