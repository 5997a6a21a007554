//! Fixture loading shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::time::Duration;

use arcforge::exec::ExecutionBudget;
use arcforge::grid::Grid;
use arcforge::task::Candidate;
use arcforge::validate::{FilterOutcome, ValidationConfig};

pub mod pipeline;
pub mod retrieval_oracle;
pub mod schema_cases;
pub mod strategies;

pub fn fixture_dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(sub)
}

pub fn candidate(stem: &str) -> Candidate {
    let path = fixture_dir("candidates").join(format!("{stem}.json"));
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Candidate::parse(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// The designed verdict of every candidate fixture.
pub const EXPECTED_VERDICTS: [(&str, FilterOutcome); 12] = [
    ("01_gravity_drop", FilterOutcome::Pass),
    ("02_rotate_90", FilterOutcome::Pass),
    ("03_unseeded_random", FilterOutcome::NonDeterministic),
    ("04_constant_fill", FilterOutcome::NonColorInvariant),
    ("05_color_lookup", FilterOutcome::NonColorInvariant),
    ("06_identity", FilterOutcome::Identity),
    ("07_bad_output", FilterOutcome::NonWellFormedOutput),
    ("08_black_output", FilterOutcome::BlackOutput),
    ("09_infinite_loop", FilterOutcome::Timeout),
    ("10_ragged_input", FilterOutcome::NonWellFormedInput),
    ("11_constant_input", FilterOutcome::DuplicateInput),
    ("12_raises", FilterOutcome::EntryPointError),
];

/// Validation settings for the fixture suite: a 2 s task budget.
pub fn suite_config() -> ValidationConfig {
    ValidationConfig {
        budget: ExecutionBudget { per_call: Duration::from_secs(2), per_task: Duration::from_secs(2) },
        rng_seed: 7,
        ..ValidationConfig::default()
    }
}

/// Every 2x2 grid over colors {0, 1, 2}.
pub fn all_small_grids() -> Vec<Grid> {
    (0..81u32)
        .map(|n| {
            let d = |k: u32| (n / 3u32.pow(k) % 3) as u8;
            Grid::from_rows(&[[d(0), d(1)], [d(2), d(3)]]).unwrap()
        })
        .collect()
}

/// Reference transforms written independently of the fake runner.
pub fn rotate_cw_ref(g: &Grid) -> Grid {
    let rows = g.to_rows();
    let (h, w) = (rows.len(), rows[0].len());
    let out: Vec<Vec<u8>> = (0..w).map(|c| (0..h).rev().map(|r| rows[r][c]).collect()).collect();
    Grid::from_rows(&out).unwrap()
}

pub fn constant_fill_ref(g: &Grid) -> Grid {
    let out: Vec<Vec<u8>> = g.to_rows().into_iter().map(|r| vec![2; r.len()]).collect();
    Grid::from_rows(&out).unwrap()
}

pub fn gravity_ref(g: &Grid) -> Grid {
    let rows = g.to_rows();
    let (h, w) = (rows.len(), rows[0].len());
    let mut out = vec![vec![0u8; w]; h];
    for c in 0..w {
        let mut bottom = h;
        for r in (0..h).rev() {
            if rows[r][c] != 0 {
                bottom -= 1;
                out[bottom][c] = rows[r][c];
            }
        }
    }
    Grid::from_rows(&out).unwrap()
}
