//! Malformed documents paired with the JSON path their error must name.

use arcforge::abstraction::abstraction_from_value;
use arcforge::schema::SchemaError;
use arcforge::task::ArcTask;
use serde_json::{json, Value};

pub const VALID_TASK: &str = r#"{
  "id": "t1",
  "train": [
    {"input": [[1, 0], [0, 0]], "output": [[0, 1], [0, 0]]},
    {"input": [[2, 2, 0]], "output": [[0, 2, 2]]}
  ],
  "test": [{"input": [[3]], "output": [[3]]}],
  "analogy": "a cart rolling to the end of the track",
  "solution": {"library": "", "main_code": "def main(g):\n    return g", "generate_input_code": "def generate_input():\n    return [[1]]", "total_code": "def main(g):\n    return g\ndef generate_input():\n    return [[1]]\n"},
  "sketch": {"concepts": ["sliding"], "description": "Shift right."},
  "provenance": {"source_gif_id": "cart", "pipeline_version": "v1", "stage_configs": [{"stage": "step2", "model_id": "gpt-4o", "max_tokens": 2048, "top_p": 1.0}]}
}"#;

pub const VALID_ABSTRACTION: &str = r#"{
  "scenario": "A ball bounces.",
  "visual_elements": ["ball"],
  "objects": [{"name": "ball", "type": "explicit"}, {"name": "floor", "type": "implicit"}],
  "static_patterns": ["floor stays"],
  "dynamic_patterns": ["ball falls"],
  "core_principles": ["gravity"],
  "interactions": [{"objects_involved": ["ball", "floor"], "interaction_type": "clear", "interaction_parameters": ["bounce"]}]
}"#;

pub struct Case {
    pub name: &'static str,
    pub path: &'static str,
    pub mutate: fn(&mut Value),
}

pub const TASK_CASES: &[Case] = &[
    Case { name: "missing id", path: "$.id", mutate: |v| drop(v.as_object_mut().unwrap().remove("id")) },
    Case { name: "ragged train input", path: "$.train[1].input", mutate: |v| v["train"][1]["input"] = json!([[2, 2, 0], [1]]) },
    Case { name: "color 10 in test output", path: "$.test[0].output", mutate: |v| v["test"][0]["output"] = json!([[3, 10]]) },
    Case { name: "negative color", path: "$.train[0].output", mutate: |v| v["train"][0]["output"] = json!([[0, -1], [0, 0]]) },
    Case { name: "31-wide input", path: "$.train[0].input", mutate: |v| v["train"][0]["input"] = json!([vec![1; 31]]) },
    Case { name: "empty test output", path: "$.test[0].output", mutate: |v| v["test"][0]["output"] = json!([]) },
    Case { name: "grid as string", path: "$.test[0].input", mutate: |v| v["test"][0]["input"] = json!("[[1]]") },
    Case { name: "missing output", path: "$.train[1].output", mutate: |v| drop(v["train"][1].as_object_mut().unwrap().remove("output")) },
    Case { name: "train not a list", path: "$.train", mutate: |v| v["train"] = json!({"input": [[1]]}) },
    Case { name: "missing total_code", path: "$.solution.total_code", mutate: |v| drop(v["solution"].as_object_mut().unwrap().remove("total_code")) },
    Case { name: "concepts as string", path: "$.sketch.concepts", mutate: |v| v["sketch"]["concepts"] = json!("sliding") },
    Case { name: "non-string concept", path: "$.sketch.concepts[0]", mutate: |v| v["sketch"]["concepts"] = json!([7]) },
    Case { name: "unknown pipeline version", path: "$.provenance.pipeline_version", mutate: |v| v["provenance"]["pipeline_version"] = json!("v9") },
    Case { name: "stage config without tokens", path: "$.provenance.stage_configs[0].max_tokens", mutate: |v| drop(v["provenance"]["stage_configs"][0].as_object_mut().unwrap().remove("max_tokens")) },
    Case { name: "metrics out of range", path: "$.metrics.loc", mutate: |v| v["metrics"] = json!({"loc": -1, "cyclomatic": 1, "nesting_depth": 1, "unique_ops": 0}) },
];

pub const ABSTRACTION_CASES: &[Case] = &[
    Case { name: "missing core_principles", path: "$.core_principles", mutate: |v| drop(v.as_object_mut().unwrap().remove("core_principles")) },
    Case { name: "scenario as number", path: "$.scenario", mutate: |v| v["scenario"] = json!(3) },
    Case { name: "object kind outside enum", path: "$.objects[1].type", mutate: |v| v["objects"][1]["type"] = json!("imaginary") },
    Case { name: "object without name", path: "$.objects[0].name", mutate: |v| drop(v["objects"][0].as_object_mut().unwrap().remove("name")) },
    Case { name: "interaction type outside enum", path: "$.interactions[0].interaction_type", mutate: |v| v["interactions"][0]["interaction_type"] = json!("vague") },
    Case { name: "interaction objects not a list", path: "$.interactions[0].objects_involved", mutate: |v| v["interactions"][0]["objects_involved"] = json!("ball") },
    Case { name: "visual element not a string", path: "$.visual_elements[0]", mutate: |v| v["visual_elements"] = json!([null]) },
];

/// Runs `cases` against `valid` and returns the cases whose error path
/// differs, as `(name, expected, actual)`.
pub fn mismatches(
    valid: &str,
    cases: &[Case],
    parse: fn(&Value) -> Result<(), Option<String>>,
) -> Vec<(&'static str, &'static str, Option<String>)> {
    let base: Value = serde_json::from_str(valid).unwrap();
    assert_eq!(parse(&base), Ok(()), "base document must be valid");
    cases
        .iter()
        .filter_map(|c| {
            let mut doc = base.clone();
            (c.mutate)(&mut doc);
            let got = parse(&doc).err().flatten();
            (got.as_deref() != Some(c.path)).then_some((c.name, c.path, got))
        })
        .collect()
}

pub fn parse_task(v: &Value) -> Result<(), Option<String>> {
    ArcTask::from_value(v).map(drop).map_err(|e| e.path().map(str::to_string))
}

pub fn parse_abstraction(v: &Value) -> Result<(), Option<String>> {
    abstraction_from_value(v).map(drop).map_err(|e: SchemaError| e.path().map(str::to_string))
}
