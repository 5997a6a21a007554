//! The full synthesis pipeline over the three fixture sources, answered
//! from recorded transcripts.
//!
//! Run with `cargo run --example replay_pipeline [out-dir]`.

use std::path::{Path, PathBuf};

use arcforge::config::{Config, Resources};
use arcforge::pipeline::{load_sources, run_pipeline, write_run};

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline");
    let cfg = Config::load(&root.join("arcforge.toml")).expect("fixture config");
    let sources = load_sources(&root.join("sources"), cfg.pipeline.max_frames).expect("sources");
    let gateway = cfg.gateway(None);
    let resources = Resources::load(&cfg).expect("seeds and prompts");
    let run = run_pipeline(&sources, &resources.bind(&gateway), &cfg.pipeline_config());

    for o in &run.outcomes {
        match (&o.failure, &o.verdict) {
            (Some((stage, why)), _) => println!("{:<14} stopped at {}: {why}", o.source_id, stage.as_str()),
            (None, Some(v)) => println!("{:<14} {v}", o.source_id),
            (None, None) => println!("{:<14} no verdict", o.source_id),
        }
    }
    println!("\n{}", serde_json::to_string_pretty(&run.fidelity.to_json()).unwrap());

    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("arcforge-run"));
    let entries = write_run(&run, &out).expect("output directory");
    for e in entries {
        println!("{}  {}", &e.digest[..16], out.join(e.path).display());
    }
}
