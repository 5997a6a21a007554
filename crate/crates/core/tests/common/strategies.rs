//! Generators for valid grids and tasks.

use std::collections::HashSet;

use arcforge::grid::{grid_hash, Grid};
use arcforge::llm::{Stage, StageConfig};
use arcforge::metrics::ComplexityReport;
use arcforge::task::{ArcTask, CandidateProgram, GridPair, PipelineVersion, Provenance, TaskPairs, TaskSketch};
use proptest::prelude::*;

pub fn grid(max_side: usize, colors: u8) -> impl Strategy<Value = Grid> {
    (1..=max_side, 1..=max_side).prop_flat_map(move |(h, w)| {
        proptest::collection::vec(proptest::collection::vec(0..colors, w), h)
            .prop_map(|rows| Grid::from_rows(&rows).expect("generated grids are valid"))
    })
}

/// Two to six pairs with pairwise distinct inputs, last one held out.
pub fn task_pairs() -> impl Strategy<Value = TaskPairs> {
    proptest::collection::vec((grid(6, 10), grid(8, 10)), 2..7)
        .prop_filter_map("inputs must be distinct", |raw| {
            let mut seen = HashSet::new();
            let pairs: Vec<GridPair> = raw
                .into_iter()
                .filter(|(i, _)| seen.insert(grid_hash(i)))
                .map(|(input, output)| GridPair { input, output })
                .collect();
            (pairs.len() >= 2).then(|| TaskPairs::split_last(pairs))
        })
}

fn text() -> impl Strategy<Value = String> {
    // Arbitrary Unicode including quotes, escapes and control characters.
    any::<String>()
}

fn stage_config() -> impl Strategy<Value = StageConfig> {
    (
        proptest::sample::select(Stage::ALL.to_vec()),
        "[a-z0-9.-]{1,16}",
        1u32..50_000,
        (1u32..=1000).prop_map(|n| f64::from(n) / 1000.0),
        proptest::option::of((0u32..=2000).prop_map(|n| f64::from(n) / 1000.0)),
    )
        .prop_map(|(stage, model_id, max_tokens, top_p, temperature)| StageConfig {
            stage,
            model_id,
            max_tokens,
            top_p,
            temperature,
        })
}

fn program() -> impl Strategy<Value = CandidateProgram> {
    (text(), text(), text()).prop_map(|(library, body, extra)| {
        let main = format!("def main(grid):\n    # {body:?}\n    return grid");
        let generate = "def generate_input():\n    return [[1]]".to_string();
        CandidateProgram {
            total_source: format!("{library}\n{main}\n{generate}\n{extra}"),
            library_prelude: library,
            main_source: main,
            generate_input_source: generate,
        }
    })
}

pub fn task() -> impl Strategy<Value = ArcTask> {
    (
        "[a-z][a-z0-9_-]{0,20}",
        task_pairs(),
        text(),
        program(),
        (proptest::collection::vec("[a-z ]{1,12}", 1..5), "[A-Za-z][A-Za-z ,.]{0,79}"),
        proptest::option::of("[a-z/_.]{1,24}"),
        proptest::option::of((1u32..500, 1u32..60, 0u32..12, 0u32..40)),
        (proptest::option::of("[a-z_]{1,12}"), any::<bool>(), proptest::collection::vec(stage_config(), 0..4)),
    )
        .prop_map(|(id, pairs, analogy, solution, (concepts, description), abstraction_ref, metrics, prov)| ArcTask {
            id,
            pairs,
            analogy,
            solution,
            sketch: TaskSketch { concepts, description },
            abstraction_ref,
            metrics: metrics.map(|(loc, cyclomatic, nesting_depth, unique_ops)| ComplexityReport {
                loc,
                cyclomatic,
                nesting_depth,
                unique_ops,
            }),
            provenance: Provenance {
                source_gif_id: prov.0,
                pipeline_version: if prov.1 { PipelineVersion::V2 } else { PipelineVersion::V1 },
                stage_configs: prov.2,
            },
        })
}
