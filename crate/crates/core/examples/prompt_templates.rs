//! Rendering the built-in stage prompts.
//!
//! Run with `cargo run --example prompt_templates [prompts-dir]`. A
//! directory overrides built-in templates by name.

use std::collections::BTreeMap;
use std::path::PathBuf;

use arcforge::pipeline::{PromptSet, PromptTemplate};

fn main() {
    let prompts = match std::env::args().nth(1) {
        Some(dir) => PromptSet::load_dir(&PathBuf::from(dir)).expect("prompt directory"),
        None => PromptSet::builtin(),
    };
    for name in prompts.names() {
        let t = prompts.get(name).unwrap();
        let declared: Vec<&str> = t.placeholders.iter().map(String::as_str).collect();
        println!("{name:<10} placeholders: {}", declared.join(", "));
    }

    let judge = prompts.get("judge").unwrap();
    let values = BTreeMap::from([
        ("candidate", "a ball rolls downhill".to_string()),
        ("ground_truth", "water flows to the lowest point".to_string()),
    ]);
    let rendered = judge.render(&values).unwrap();
    println!("\n--- judge user prompt ---\n{}", rendered.user);

    // Literal braces are doubled; every placeholder must be declared.
    let t = PromptTemplate::new("demo", "", "Reply as {{\"score\": x}} about {topic}.", ["topic"]).unwrap();
    println!("\n{}", t.render(&BTreeMap::from([("topic", "rain".to_string())])).unwrap().user);
    println!("{}", PromptTemplate::new("demo", "", "{undeclared}", Vec::<String>::new()).unwrap_err());
}
