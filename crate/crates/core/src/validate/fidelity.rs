//! Per-stage conditional success rates of the synthesis pipeline.
//!
//! Rates are kept as exact integer ratios and rendered in basis points with
//! half-up rounding, so `9412/10000` prints as `94.12%` with no float in the
//! path. A stage with no attempts has no rate and renders as `n/a`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Pipeline stages that keep a success bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityStage {
    /// GIF to visual abstraction.
    Abstraction,
    /// Abstraction to task sketch.
    Sketch,
    /// Sketch to a parsed candidate program.
    Task,
    /// Candidate program through the quality gate.
    Validator,
}

impl FidelityStage {
    pub const ALL: [FidelityStage; 4] =
        [FidelityStage::Abstraction, FidelityStage::Sketch, FidelityStage::Task, FidelityStage::Validator];

    pub fn as_str(self) -> &'static str {
        match self {
            FidelityStage::Abstraction => "abstraction",
            FidelityStage::Sketch => "sketch",
            FidelityStage::Task => "task",
            FidelityStage::Validator => "validator",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// An exact success ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Rate {
    pub attempts: u64,
    pub successes: u64,
}

impl Rate {
    pub fn new(successes: u64, attempts: u64) -> Self {
        debug_assert!(successes <= attempts);
        Rate { attempts, successes }
    }

    /// Rate in basis points, rounded half up; `None` without attempts.
    pub fn basis_points(&self) -> Option<u64> {
        if self.attempts == 0 {
            return None;
        }
        let scaled = u128::from(self.successes) * 20_000 + u128::from(self.attempts);
        Some((scaled / (2 * u128::from(self.attempts))) as u64)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.basis_points() {
            None => f.write_str("n/a"),
            Some(bp) => write!(f, "{}.{:02}%", bp / 100, bp % 100),
        }
    }
}

/// Atomic attempt and success counters per stage.
#[derive(Debug, Default)]
pub struct FidelityReport {
    attempts: [AtomicU64; 4],
    successes: [AtomicU64; 4],
}

impl FidelityReport {
    pub fn new() -> Self {
        FidelityReport::default()
    }

    /// Records one attempt at `stage`.
    pub fn accumulate(&self, stage: FidelityStage, success: bool) {
        let i = stage.index();
        // Attempts are bumped before successes and readers load successes
        // before attempts, so no reader observes successes > attempts.
        self.attempts[i].fetch_add(1, Ordering::SeqCst);
        if success {
            self.successes[i].fetch_add(1, Ordering::SeqCst);
        }
    }

    pub fn rate(&self, stage: FidelityStage) -> Rate {
        let i = stage.index();
        let successes = self.successes[i].load(Ordering::SeqCst);
        let attempts = self.attempts[i].load(Ordering::SeqCst);
        Rate { attempts, successes }
    }

    pub fn snapshot(&self) -> Vec<(FidelityStage, Rate)> {
        FidelityStage::ALL.iter().map(|s| (*s, self.rate(*s))).collect()
    }

    /// `{"abstraction": {"attempts": .., "successes": .., "rate": ".."}, ..}`
    pub fn to_json(&self) -> serde_json::Value {
        let map = self
            .snapshot()
            .into_iter()
            .map(|(stage, r)| {
                let v = serde_json::json!({
                    "attempts": r.attempts,
                    "successes": r.successes,
                    "rate": r.to_string(),
                });
                (stage.as_str().to_string(), v)
            })
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }

    /// A fixed-width table, one stage per line.
    pub fn render(&self) -> String {
        let mut out = format!("{:<12} {:>9} {:>9} {:>8}\n", "stage", "attempts", "successes", "rate");
        for (stage, r) in self.snapshot() {
            out.push_str(&format!("{:<12} {:>9} {:>9} {:>8}\n", stage.as_str(), r.attempts, r.successes, r.to_string()));
        }
        out
    }
}

/// Records one attempt at `stage` into `report` and returns it, for
/// call sites that thread the report through.
pub fn fidelity_accumulate(stage: FidelityStage, success: bool, report: &FidelityReport) -> &FidelityReport {
    report.accumulate(stage, success);
    report
}
