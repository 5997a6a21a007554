//! An in-process stand-in for the Python runner.
//!
//! It does not interpret code. A loaded source selects one of a fixed set
//! of scripted behaviours through a marker line:
//!
//! ```text
//! # fake-runner: gravity_drop
//! ```
//!
//! The source must still define `main` and `generate_input`, and imports of
//! denied modules are rejected the way the real runner rejects them, so the
//! same candidate files drive both runners.

use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::protocol::{ErrorKind, Handshake, Op, RunnerRequest, RunnerResponse};
use crate::grid::{Color, Grid, GridRole, RawMatrix};
use crate::task::{defines_function, GENERATOR_ENTRY, MAIN_ENTRY};

pub const MARKER: &str = "# fake-runner:";

/// Modules the runners refuse to import.
pub const DENIED_MODULES: [&str; 10] =
    ["os", "sys", "subprocess", "socket", "shutil", "pathlib", "urllib", "http", "multiprocessing", "ctypes"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FakeProgram {
    Identity,
    Transpose,
    Rotate90,
    Checkerboard,
    GravityDrop,
    UnseededRandom,
    ConstantFill,
    ColorLookup,
    ColorOverflow,
    BlackOutput,
    BadOutput,
    RaggedInput,
    ConstantInput,
    InfiniteLoop,
    Raises,
}

impl FakeProgram {
    pub const ALL: [FakeProgram; 15] = [
        FakeProgram::Identity,
        FakeProgram::Transpose,
        FakeProgram::Rotate90,
        FakeProgram::Checkerboard,
        FakeProgram::GravityDrop,
        FakeProgram::UnseededRandom,
        FakeProgram::ConstantFill,
        FakeProgram::ColorLookup,
        FakeProgram::ColorOverflow,
        FakeProgram::BlackOutput,
        FakeProgram::BadOutput,
        FakeProgram::RaggedInput,
        FakeProgram::ConstantInput,
        FakeProgram::InfiniteLoop,
        FakeProgram::Raises,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FakeProgram::Identity => "identity",
            FakeProgram::Transpose => "transpose",
            FakeProgram::Rotate90 => "rotate_90",
            FakeProgram::Checkerboard => "checkerboard",
            FakeProgram::GravityDrop => "gravity_drop",
            FakeProgram::UnseededRandom => "unseeded_random",
            FakeProgram::ConstantFill => "constant_fill",
            FakeProgram::ColorLookup => "color_lookup",
            FakeProgram::ColorOverflow => "color_overflow",
            FakeProgram::BlackOutput => "black_output",
            FakeProgram::BadOutput => "bad_output",
            FakeProgram::RaggedInput => "ragged_input",
            FakeProgram::ConstantInput => "constant_input",
            FakeProgram::InfiniteLoop => "infinite_loop",
            FakeProgram::Raises => "raises",
        }
    }

    /// Reads the marker line of `source`.
    pub fn from_source(source: &str) -> Option<Self> {
        let name = source.lines().find_map(|l| l.trim().strip_prefix(MARKER))?.trim();
        FakeProgram::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// First denied module imported by `source`, if any.
pub fn denied_import(source: &str) -> Option<&'static str> {
    for line in source.lines() {
        let t = line.trim();
        let modules: Vec<&str> = if let Some(rest) = t.strip_prefix("import ") {
            rest.split(',').map(|m| m.split_whitespace().next().unwrap_or("")).collect()
        } else if let Some(rest) = t.strip_prefix("from ") {
            rest.split_whitespace().next().into_iter().collect()
        } else {
            continue;
        };
        for m in modules {
            let root = m.split('.').next().unwrap_or("");
            if let Some(d) = DENIED_MODULES.iter().find(|d| **d == root) {
                return Some(d);
            }
        }
    }
    None
}

/// The checkerboard generator's output for `seed`: 5x5, colors
/// `a = 1 + seed % 9` and `b = 1 + (seed + 4) % 9`, `a` where `row + col`
/// is even.
pub fn checkerboard(seed: u64) -> Grid {
    let a = Color::new(1 + (seed % 9) as u8).expect("in range");
    let b = Color::new(1 + ((seed + 4) % 9) as u8).expect("in range");
    let mut g = Grid::filled(5, 5, a);
    for r in 0..5 {
        for c in 0..5 {
            if (r + c) % 2 == 1 {
                g.set(r, c, b);
            }
        }
    }
    g
}

fn rows_value(rows: Vec<Vec<i64>>) -> Value {
    RawMatrix::from_rows(rows).to_json()
}

fn grid_value(g: &Grid) -> Value {
    g.to_raw().to_json()
}

/// A random grid between 3x3 and 8x8 with roughly a third of the cells set
/// to colors from `palette` on a black background, never all black.
fn sparse_grid(rng: &mut ChaCha8Rng, palette: &[u8]) -> Grid {
    let h = rng.random_range(3..=8);
    let w = rng.random_range(3..=8);
    let mut g = Grid::filled(h, w, Color::new(0).expect("black"));
    for r in 0..h {
        for c in 0..w {
            if rng.random_bool(0.35) {
                g.set(r, c, Color::new(palette[rng.random_range(0..palette.len())]).expect("palette"));
            }
        }
    }
    if g.is_all(Color::new(0).expect("black")) {
        g.set(rng.random_range(0..h), rng.random_range(0..w), Color::new(palette[0]).expect("palette"));
    }
    g
}

fn map_cells(g: &Grid, f: impl Fn(u8) -> Option<i64>) -> Result<Value, String> {
    let mut rows = Vec::with_capacity(g.height());
    for row in g.rows() {
        let mut out = Vec::with_capacity(row.len());
        for c in row {
            out.push(f(c.code()).ok_or_else(|| format!("KeyError: {}", c.code()))?);
        }
        rows.push(out);
    }
    Ok(rows_value(rows))
}

/// Per-session runner state.
#[derive(Default)]
struct FakeState {
    program: Option<FakeProgram>,
    main_calls: u64,
}

enum Outcome {
    Grid(Value),
    Error(ErrorKind, String),
    Cancelled,
}

impl FakeState {
    fn load(&mut self, code: &str) -> Result<(), (ErrorKind, String)> {
        self.program = None;
        self.main_calls = 0;
        if let Some(m) = denied_import(code) {
            return Err((ErrorKind::ImportDenied, format!("import of module '{m}' is not allowed")));
        }
        for entry in [MAIN_ENTRY, GENERATOR_ENTRY] {
            if !defines_function(code, entry) {
                return Err((ErrorKind::Exception, format!("entry point '{entry}' is not defined")));
            }
        }
        let program = FakeProgram::from_source(code)
            .ok_or_else(|| (ErrorKind::Exception, "fake runner: no known program marker in source".to_string()))?;
        self.program = Some(program);
        Ok(())
    }

    fn generate_input(&mut self, seed: u64) -> Outcome {
        let Some(program) = self.program else {
            return Outcome::Error(ErrorKind::Exception, "no program loaded".into());
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let palette_all: Vec<u8> = (1..=9).collect();
        let g = match program {
            FakeProgram::Checkerboard => checkerboard(seed),
            FakeProgram::RaggedInput => return Outcome::Grid(rows_value(vec![vec![1, 2, 3], vec![4, 5]])),
            FakeProgram::ConstantInput => Grid::from_rows(&[[1u8, 2], [3, 4]]).expect("valid"),
            FakeProgram::ColorLookup => sparse_grid(&mut rng, &[1, 2, 3]),
            FakeProgram::ColorOverflow => sparse_grid(&mut rng, &[1, 2, 3, 4, 5]),
            FakeProgram::GravityDrop => sparse_grid(&mut rng, &palette_all),
            _ => {
                let mut g = sparse_grid(&mut rng, &palette_all);
                if program == FakeProgram::Transpose && g.height() == g.width() {
                    // Transpose inputs are kept non-square so outputs differ in shape.
                    g = Grid::filled(g.height(), g.width() + 1, Color::new(3).expect("green"));
                    g.set(0, 0, Color::new(rng.random_range(1..=9)).expect("in range"));
                }
                g
            }
        };
        Outcome::Grid(grid_value(&g))
    }

    fn main(&mut self, input: &Grid, cancel: &AtomicBool) -> Outcome {
        let Some(program) = self.program else {
            return Outcome::Error(ErrorKind::Exception, "no program loaded".into());
        };
        self.main_calls += 1;
        let ok = |v: Value| Outcome::Grid(v);
        match program {
            FakeProgram::Identity => ok(grid_value(input)),
            FakeProgram::Transpose => ok(grid_value(&input.transpose())),
            FakeProgram::Rotate90 => ok(grid_value(&input.rotate_cw())),
            FakeProgram::Checkerboard => {
                let colors: Vec<u8> = {
                    let mut seen: Vec<u8> = input.cells().iter().map(|c| c.code()).collect();
                    seen.sort_unstable();
                    seen.dedup();
                    seen
                };
                if colors.len() != 2 {
                    return ok(grid_value(input));
                }
                let (a, b) = (colors[0], colors[1]);
                match map_cells(input, |c| Some(if c == a { b } else { a } as i64)) {
                    Ok(v) => ok(v),
                    Err(e) => Outcome::Error(ErrorKind::Exception, e),
                }
            }
            FakeProgram::GravityDrop => {
                let (h, w) = (input.height(), input.width());
                let mut out = Grid::filled(h, w, Color::new(0).expect("black"));
                for c in 0..w {
                    let column: Vec<Color> = (0..h).map(|r| input.get(r, c)).filter(|x| x.code() != 0).collect();
                    for (i, &color) in column.iter().rev().enumerate() {
                        out.set(h - 1 - i, c, color);
                    }
                }
                ok(grid_value(&out))
            }
            FakeProgram::UnseededRandom => {
                let salt = self.main_calls;
                let rows = input
                    .rows()
                    .enumerate()
                    .map(|(r, row)| (0..row.len()).map(|c| ((salt + r as u64 * 7 + c as u64) % 9 + 1) as i64).collect())
                    .collect();
                ok(rows_value(rows))
            }
            FakeProgram::ConstantFill => ok(grid_value(&Grid::filled(input.height(), input.width(), Color::new(2).expect("red")))),
            FakeProgram::ColorLookup => {
                match map_cells(input, |c| match c {
                    0 => Some(0),
                    1 => Some(2),
                    2 => Some(3),
                    3 => Some(1),
                    _ => None,
                }) {
                    Ok(v) => ok(v),
                    Err(e) => Outcome::Error(ErrorKind::Exception, e),
                }
            }
            FakeProgram::ColorOverflow => match map_cells(input, |c| Some(if c == 0 { 0 } else { c as i64 + 1 })) {
                Ok(v) => ok(v),
                Err(e) => Outcome::Error(ErrorKind::Exception, e),
            },
            FakeProgram::BlackOutput => ok(grid_value(&Grid::filled(input.height(), input.width(), Color::new(0).expect("black")))),
            FakeProgram::BadOutput => {
                let mut rows: Vec<Vec<i64>> = input.to_rows().into_iter().map(|r| r.into_iter().map(i64::from).collect()).collect();
                rows[0][0] = 12;
                ok(rows_value(rows))
            }
            FakeProgram::RaggedInput | FakeProgram::ConstantInput => ok(grid_value(&input.rotate_cw())),
            FakeProgram::InfiniteLoop => {
                while !cancel.load(Ordering::Relaxed) {
                    std::thread::sleep(Duration::from_millis(5));
                }
                Outcome::Cancelled
            }
            FakeProgram::Raises => Outcome::Error(ErrorKind::Exception, "ZeroDivisionError: division by zero".into()),
        }
    }
}

/// Serves protocol v1 until shutdown, end of input, or `cancel`.
pub fn serve(reader: impl BufRead, mut writer: impl Write, cancel: &AtomicBool) -> std::io::Result<()> {
    let mut hello = serde_json::to_string(&Handshake::current()).expect("plain data");
    hello.push('\n');
    writer.write_all(hello.as_bytes())?;
    writer.flush()?;
    let mut state = FakeState::default();
    for line in reader.lines() {
        if cancel.load(Ordering::Relaxed) {
            return Ok(());
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<RunnerRequest>(&line) {
            Err(e) => {
                let id = serde_json::from_str::<Value>(&line).ok().and_then(|v| v.get("id")?.as_u64()).unwrap_or(0);
                RunnerResponse::err(id, ErrorKind::Malformed, format!("malformed request: {e}"))
            }
            Ok(req) => {
                let id = req.id;
                match req.op {
                    Op::Shutdown => {
                        writer.write_all(RunnerResponse::ok(id, None).to_line().as_bytes())?;
                        writer.flush()?;
                        return Ok(());
                    }
                    Op::Load => match req.code.as_deref() {
                        None => RunnerResponse::err(id, ErrorKind::Malformed, "load requires code"),
                        Some(code) => match state.load(code) {
                            Ok(()) => RunnerResponse::ok(id, None),
                            Err((kind, msg)) => RunnerResponse::err(id, kind, msg),
                        },
                    },
                    Op::GenerateInput => outcome_response(id, state.generate_input(req.seed.unwrap_or(0))),
                    Op::Main => match &req.input {
                        None => RunnerResponse::err(id, ErrorKind::Malformed, "main requires input"),
                        Some(input) => match state.main(input, cancel) {
                            Outcome::Cancelled => return Ok(()),
                            o => outcome_response(id, o),
                        },
                    },
                }
            }
        };
        writer.write_all(response.to_line().as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

fn outcome_response(id: u64, outcome: Outcome) -> RunnerResponse {
    match outcome {
        Outcome::Grid(v) => RunnerResponse::ok(id, Some(v)),
        Outcome::Error(kind, msg) => RunnerResponse::err(id, kind, msg),
        Outcome::Cancelled => RunnerResponse::err(id, ErrorKind::Exception, "cancelled"),
    }
}

/// Parses a raw matrix as a grid under `role`, for callers of the fake.
pub fn parse_grid(v: &Value, role: GridRole) -> Option<Grid> {
    Grid::from_raw(&RawMatrix::from_json(v), role).ok()
}
