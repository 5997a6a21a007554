//! Protocol conformance checks any runner implementation must pass.

use std::time::{Duration, Instant};

use serde::Serialize;

use super::programs;
use super::protocol::{ErrorKind, ExecutionBudget, Op};
use super::session::{spawn_runner, CallPayload, ExecError, RunFailure, RunnerConfig, Session};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub checks: Vec<CheckResult>,
}

impl ConformanceReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

type Check = fn(&RunnerConfig) -> Result<(), String>;

const CHECKS: [(&str, Check); 9] = [
    ("handshake", check_handshake),
    ("id_discipline", check_ids),
    ("malformed_request_recovery", check_malformed),
    ("crash_containment", check_crash_containment),
    ("transpose_round_trip", check_transpose),
    ("exception_capture", check_exception),
    ("import_denial", check_import_denial),
    ("seeded_generate_input", check_seeded),
    ("timeout_kill", check_timeout),
];

/// Runs every check against fresh sessions from `config`.
pub fn run_conformance(config: &RunnerConfig) -> ConformanceReport {
    let checks = CHECKS
        .iter()
        .map(|(name, check)| match check(config) {
            Ok(()) => CheckResult { name, passed: true, detail: String::new() },
            Err(detail) => CheckResult { name, passed: false, detail },
        })
        .collect();
    ConformanceReport { checks }
}

fn budget() -> ExecutionBudget {
    ExecutionBudget { per_call: Duration::from_secs(10), per_task: Duration::from_secs(30) }
}

fn session(config: &RunnerConfig) -> Result<Session, String> {
    spawn_runner(config).map_err(|e| e.to_string())
}

fn loaded(config: &RunnerConfig, code: &str) -> Result<Session, String> {
    let mut s = session(config)?;
    s.load(code, &budget()).map_err(|e| format!("load failed: {e}"))?;
    Ok(s)
}

fn grid(rows: &[[u8; 2]]) -> Grid {
    Grid::from_rows(rows).expect("valid literal")
}

fn check_handshake(config: &RunnerConfig) -> Result<(), String> {
    session(config)?.shutdown();
    Ok(())
}

fn check_ids(config: &RunnerConfig) -> Result<(), String> {
    let mut s = loaded(config, programs::TRANSPOSE)?;
    let mut expected = 2;
    for i in 0..20u64 {
        let (op, payload) = if i % 2 == 0 {
            (Op::GenerateInput, CallPayload { seed: Some(i), ..Default::default() })
        } else {
            (Op::Main, CallPayload { input: Some(grid(&[[1, 2], [3, 4]])), ..Default::default() })
        };
        let r = s.call(op, payload, &budget()).map_err(|e| e.to_string())?;
        if r.id != expected {
            return Err(format!("response id {} for request {expected}", r.id));
        }
        expected += 1;
    }
    s.shutdown();
    Ok(())
}

fn check_malformed(config: &RunnerConfig) -> Result<(), String> {
    let mut s = loaded(config, programs::TRANSPOSE)?;
    for line in ["this is not json", r#"{"id": 99, "op": "fly"}"#, "[1, 2, 3]"] {
        let r = s.send_raw_line(line, &budget()).map_err(|e| e.to_string())?;
        if r.ok || r.error_kind != Some(ErrorKind::Malformed) {
            return Err(format!("{line:?} answered with {r:?}"));
        }
    }
    let out = s.run_main(&grid(&[[1, 2], [3, 4]]), &budget()).map_err(|e| format!("after malformed: {e}"))?;
    if out != grid(&[[1, 3], [2, 4]]) {
        return Err(format!("wrong output after recovery: {out:?}"));
    }
    s.shutdown();
    Ok(())
}

fn check_crash_containment(config: &RunnerConfig) -> Result<(), String> {
    let mut s = loaded(config, programs::RAISES)?;
    for _ in 0..2 {
        match s.run_main(&grid(&[[1, 2], [3, 4]]), &budget()) {
            Err(RunFailure::Exception { kind: ErrorKind::Exception, .. }) => {}
            other => return Err(format!("expected exception, got {other:?}")),
        }
    }
    s.load(programs::TRANSPOSE, &budget()).map_err(|e| format!("reload failed: {e}"))?;
    s.run_main(&grid(&[[1, 2], [3, 4]]), &budget()).map_err(|e| format!("runner did not survive: {e}"))?;
    s.shutdown();
    Ok(())
}

fn check_transpose(config: &RunnerConfig) -> Result<(), String> {
    let mut s = loaded(config, programs::TRANSPOSE)?;
    let out = s.run_main(&grid(&[[1, 2], [3, 4]]), &budget()).map_err(|e| e.to_string())?;
    if out != grid(&[[1, 3], [2, 4]]) {
        return Err(format!("got {out:?}"));
    }
    s.shutdown();
    Ok(())
}

fn check_exception(config: &RunnerConfig) -> Result<(), String> {
    let mut s = loaded(config, programs::RAISES)?;
    match s.run_main(&grid(&[[0, 1], [1, 0]]), &budget()) {
        Err(RunFailure::Exception { kind: ErrorKind::Exception, message }) if !message.is_empty() => Ok(()),
        other => Err(format!("expected exception with message, got {other:?}")),
    }
}

fn check_import_denial(config: &RunnerConfig) -> Result<(), String> {
    let mut s = session(config)?;
    match s.load(programs::DENIED_IMPORT, &budget()) {
        Err(RunFailure::Exception { kind: ErrorKind::ImportDenied, .. }) => Ok(()),
        other => Err(format!("expected import_denied, got {other:?}")),
    }
}

fn check_seeded(config: &RunnerConfig) -> Result<(), String> {
    let mut s = loaded(config, programs::TRANSPOSE)?;
    let a = s.run_generate_input(5, &budget()).map_err(|e| e.to_string())?;
    let b = s.run_generate_input(5, &budget()).map_err(|e| e.to_string())?;
    if a != b {
        return Err(format!("seed 5 gave {a:?} then {b:?}"));
    }
    Ok(())
}

fn check_timeout(config: &RunnerConfig) -> Result<(), String> {
    let two = ExecutionBudget { per_call: Duration::from_secs(2), per_task: Duration::from_secs(2) };
    let mut s = session(config)?;
    s.load(programs::INFINITE_LOOP, &two).map_err(|e| format!("load failed: {e}"))?;
    let started = Instant::now();
    let result = s.run_main(&grid(&[[1, 2], [3, 4]]), &two);
    let elapsed = started.elapsed();
    if result != Err(RunFailure::Timeout) {
        return Err(format!("expected timeout, got {result:?}"));
    }
    if elapsed > Duration::from_secs(4) {
        return Err(format!("timeout took {elapsed:?}"));
    }
    if s.is_alive() {
        return Err("session still alive after timeout".into());
    }
    match s.run_main(&grid(&[[1, 2], [3, 4]]), &two) {
        Err(RunFailure::Session(ExecError::SessionDead)) => Ok(()),
        other => Err(format!("call after timeout returned {other:?}")),
    }
}
