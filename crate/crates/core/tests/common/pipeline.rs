//! The three-source replay fixture: authoring (bless) and replay.
//!
//! `fixtures/pipeline/` holds a config, three sources, the transcripts that
//! answer every model call, and the golden outputs of a replay run. Setting
//! `ARCFORGE_BLESS=1` re-authors the transcripts from the scripted replies
//! below and rewrites the golden files.
//!
//! The sources are a real animated GIF of falling snow, a precomputed fan
//! abstraction and a precomputed windmill abstraction whose sketch reply is
//! prose without the required headers. The generated programs carry
//! fake-runner markers so validation needs no Python.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use arcforge::config::{Config, Resources};
use arcforge::llm::{ChatRequest, FnProvider, Gateway, GatewayError, RecordingProvider, RetryPolicy, Stage};
use arcforge::pipeline::{load_sources, run_pipeline, write_run, PipelineRun};
use image::codecs::gif::{GifEncoder, Repeat};
use image::{Delay, Frame, Rgba, RgbaImage};

pub fn root() -> PathBuf {
    super::fixture_dir("pipeline")
}

pub fn config() -> Config {
    Config::load(&root().join("arcforge.toml")).expect("fixture config")
}

pub fn sources_dir() -> PathBuf {
    root().join("sources")
}

pub fn transcripts_dir() -> PathBuf {
    root().join("transcripts")
}

pub fn golden_dir() -> PathBuf {
    root().join("golden")
}

pub fn blessing() -> bool {
    std::env::var("ARCFORGE_BLESS").is_ok_and(|v| v == "1")
}

/// Four 8x8 frames of a white flake falling onto a green strip.
pub fn snowfall_gif() -> Vec<u8> {
    let mut bytes = Vec::new();
    {
        let mut enc = GifEncoder::new(&mut bytes);
        enc.set_repeat(Repeat::Infinite).unwrap();
        for step in 0..4u32 {
            let mut img = RgbaImage::from_pixel(8, 8, Rgba([0, 0, 0, 255]));
            for x in 0..8 {
                img.put_pixel(x, 7, Rgba([0, 160, 0, 255]));
            }
            img.put_pixel(3, step * 2, Rgba([255, 255, 255, 255]));
            img.put_pixel(5, (step * 2 + 1).min(6), Rgba([255, 255, 255, 255]));
            enc.encode_frame(Frame::from_parts(img, 0, 0, Delay::from_numer_denom_ms(200, 1))).unwrap();
        }
    }
    bytes
}

pub const SNOWFALL_ABSTRACTION: &str = r#"{
  "scenario": "Snowflakes drift down from the top of the frame and settle on a strip of green ground, piling up where they land.",
  "visual_elements": ["white snowflakes", "green ground strip", "black night sky"],
  "objects": [
    {"name": "snowflake", "type": "explicit"},
    {"name": "ground", "type": "explicit"}
  ],
  "static_patterns": ["the ground stays at the bottom row", "the sky stays black"],
  "dynamic_patterns": ["each snowflake moves straight down one step per frame", "snowflakes stop when they touch the ground or another flake"],
  "core_principles": ["gravity pulls every flake downward until something supports it"],
  "interactions": [
    {"objects_involved": ["snowflake", "ground"], "interaction_type": "clear", "interaction_parameters": ["contact", "resting height"]},
    {"objects_involved": ["snowflake", "snowflake"], "interaction_type": "constraint", "interaction_parameters": ["stacking"]}
  ]
}"#;

const SNOW_SKETCH: &str = "# concepts:\n# gravity, accumulation, snowfall\n\n# description:\n# In the input you will see snowflake pixels of several colors scattered over a black sky. To make the output, let every snowflake fall straight down until it lands on the bottom row or on another snowflake, so each column ends as a pile at the bottom.\n";

const FAN_SKETCH: &str = "Here is a new puzzle in the requested format.\n\n# concepts:\n# rotation, symmetry, fan blade\n\n# description:\n# In the input you will see a fan blade pattern on a square black canvas. To make the output, turn the whole fan blade pattern a quarter turn clockwise around the center of the grid.\n";

const WINDMILL_PROSE: &str = "A windmill is a lovely subject. I would build a puzzle where the sails rotate and the clouds drift, maybe with the clouds wrapping around the edges. Let me know if you want me to write it up.";

fn program_reply(marker: &str, main: &str, generate: &str) -> String {
    let library = "from common import *\nimport random";
    let total = format!("# fake-runner: {marker}\n{library}\n\n{main}\n\n{generate}\n");
    let v = serde_json::json!({
        "library": library,
        "main_code": main,
        "generate_input_code": generate,
        "total_code": total,
    });
    format!("```json\n{}\n```", serde_json::to_string_pretty(&v).unwrap())
}

fn snow_program() -> String {
    program_reply(
        "gravity_drop",
        "def main(input_grid):\n    height, width = grid_size(input_grid)\n    snowbank = new_grid(height, width)\n    for col in range(width):\n        flakes = [input_grid[row][col] for row in range(height) if input_grid[row][col] != BLACK]\n        for depth, flake in enumerate(reversed(flakes)):\n            snowbank[height - 1 - depth][col] = flake\n    return snowbank",
        "def generate_input():\n    height, width = random.randint(4, 10), random.randint(4, 10)\n    sky = new_grid(height, width)\n    for _ in range(random.randint(2, height * width // 3)):\n        sky[random.randrange(height)][random.randrange(width)] = random.choice(NOT_BLACK)\n    return sky",
    )
}

fn fan_program() -> String {
    program_reply(
        "rotate_90",
        "def main(input_grid):\n    return rotate_cw(input_grid)",
        "def generate_input():\n    size = random.randint(3, 9)\n    fan = new_grid(size, size)\n    blade_color = random.choice(NOT_BLACK)\n    for step in range(size // 2 + 1):\n        fan[step][size // 2] = blade_color\n    fan[size // 2][0] = random.choice(NOT_BLACK)\n    return fan",
    )
}

/// The scripted model used to author the transcripts.
pub fn scripted_reply(req: &ChatRequest<'_>) -> Result<String, GatewayError> {
    let user = req.user;
    let reply = match req.config.stage {
        Stage::Step1 => format!("Here is the analysis.\n```json\n{SNOWFALL_ABSTRACTION}\n```"),
        Stage::Step2 if user.contains("windmill") => WINDMILL_PROSE.to_string(),
        Stage::Step2 if user.contains("fan blade") => FAN_SKETCH.to_string(),
        Stage::Step2 if user.contains("snowflake") => SNOW_SKETCH.to_string(),
        Stage::Step3 if user.contains("fan blade") => fan_program(),
        Stage::Step3 if user.contains("snowflake") => snow_program(),
        _ => return Err(GatewayError::Malformed(format!("no scripted reply for {} request", req.config.stage))),
    };
    Ok(reply)
}

/// Runs the fixture config against `gateway`, writing into `out`.
pub fn run_into(gateway: &Gateway, out: &Path, workers: usize) -> PipelineRun {
    let cfg = config();
    let resources = Resources::load(&cfg).expect("fixture resources");
    let sources = load_sources(&sources_dir(), cfg.pipeline.max_frames).expect("fixture sources");
    let mut pcfg = cfg.pipeline_config();
    pcfg.workers = workers;
    let run = run_pipeline(&sources, &resources.bind(gateway), &pcfg);
    write_run(&run, out).expect("write run");
    run
}

/// Rewrites the GIF (only when missing), the transcripts and the golden
/// outputs.
pub fn bless() {
    let gif = sources_dir().join("snowfall.gif");
    if !gif.exists() {
        std::fs::write(&gif, snowfall_gif()).unwrap();
    }
    let _ = std::fs::remove_dir_all(transcripts_dir());
    let _ = std::fs::remove_dir_all(golden_dir());
    let recorder = RecordingProvider::new(Arc::new(FnProvider::new(scripted_reply)), transcripts_dir()).unwrap();
    let gateway = Gateway::with_limits(Arc::new(recorder), RetryPolicy::none(), 4);
    run_into(&gateway, &golden_dir(), 1);
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap_or_else(|e| panic!("{}: {e}", d.display())) {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// Byte comparison of every file under `golden` and `actual`; the error
/// names the first difference.
pub fn compare_trees(golden: &Path, actual: &Path) -> Result<usize, String> {
    let expected = files_under(golden);
    let got = files_under(actual);
    if expected != got {
        return Err(format!("file sets differ: golden {expected:?}, actual {got:?}"));
    }
    for rel in &expected {
        if std::fs::read(golden.join(rel)).unwrap() != std::fs::read(actual.join(rel)).unwrap() {
            return Err(format!("{} differs from golden", rel.display()));
        }
    }
    Ok(expected.len())
}
