//! Filter verdicts and their per-outcome tallies.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// The outcome of the quality gate for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOutcome {
    Pass,
    NonDeterministic,
    NonColorInvariant,
    Identity,
    NonWellFormedOutput,
    BlackOutput,
    Timeout,
    NonWellFormedInput,
    DuplicateInput,
    EntryPointError,
}

impl FilterOutcome {
    pub const ALL: [FilterOutcome; 10] = [
        FilterOutcome::Pass,
        FilterOutcome::NonDeterministic,
        FilterOutcome::NonColorInvariant,
        FilterOutcome::Identity,
        FilterOutcome::NonWellFormedOutput,
        FilterOutcome::BlackOutput,
        FilterOutcome::Timeout,
        FilterOutcome::NonWellFormedInput,
        FilterOutcome::DuplicateInput,
        FilterOutcome::EntryPointError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterOutcome::Pass => "pass",
            FilterOutcome::NonDeterministic => "non_deterministic",
            FilterOutcome::NonColorInvariant => "non_color_invariant",
            FilterOutcome::Identity => "identity",
            FilterOutcome::NonWellFormedOutput => "non_well_formed_output",
            FilterOutcome::BlackOutput => "black_output",
            FilterOutcome::Timeout => "timeout",
            FilterOutcome::NonWellFormedInput => "non_well_formed_input",
            FilterOutcome::DuplicateInput => "duplicate_input",
            FilterOutcome::EntryPointError => "entry_point_error",
        }
    }

    fn index(self) -> usize {
        FilterOutcome::ALL.iter().position(|o| *o == self).expect("listed")
    }
}

impl fmt::Display for FilterOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterOutcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FilterOutcome::ALL.into_iter().find(|o| o.as_str() == s).ok_or_else(|| format!("unknown verdict `{s}`"))
    }
}

/// An outcome plus a human-readable detail naming the offending pair or
/// permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub outcome: FilterOutcome,
    pub detail: String,
}

impl FilterVerdict {
    pub fn new(outcome: FilterOutcome, detail: impl Into<String>) -> Self {
        FilterVerdict { outcome, detail: detail.into() }
    }

    pub fn pass(detail: impl Into<String>) -> Self {
        FilterVerdict::new(FilterOutcome::Pass, detail)
    }
}

impl fmt::Display for FilterVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.detail.is_empty() {
            write!(f, "{}", self.outcome)
        } else {
            write!(f, "{}: {}", self.outcome, self.detail)
        }
    }
}

/// Thread-safe per-outcome counts. Every candidate lands in exactly one
/// bucket, so the buckets partition the candidates seen.
#[derive(Debug, Default)]
pub struct VerdictTally {
    counts: [AtomicU64; 10],
}

impl VerdictTally {
    pub fn new() -> Self {
        VerdictTally::default()
    }

    pub fn record(&self, outcome: FilterOutcome) {
        self.counts[outcome.index()].fetch_add(1, Ordering::Relaxed);
    }

    pub fn count(&self, outcome: FilterOutcome) -> u64 {
        self.counts[outcome.index()].load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        FilterOutcome::ALL.iter().map(|o| self.count(*o)).sum()
    }

    /// Non-zero buckets in declaration order.
    pub fn nonzero(&self) -> Vec<(FilterOutcome, u64)> {
        FilterOutcome::ALL.iter().map(|o| (*o, self.count(*o))).filter(|(_, n)| *n > 0).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map = FilterOutcome::ALL
            .iter()
            .map(|o| (o.as_str().to_string(), serde_json::Value::from(self.count(*o))))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }
}
