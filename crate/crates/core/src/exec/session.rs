//! Runner sessions: spawning, handshake, and deadline-bounded calls.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::fake;
use super::protocol::{
    ErrorKind, ExecutionBudget, Handshake, Op, RunnerRequest, RunnerResponse, PROTOCOL_VERSION, RUNNER_HELLO,
};
use crate::grid::{Grid, GridRole, GridVerdict, RawMatrix};

/// How to obtain a runner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunnerConfig {
    /// The scripted in-process runner.
    Fake,
    /// An executable speaking protocol v1 on stdio.
    Command { program: PathBuf, args: Vec<String> },
}

impl RunnerConfig {
    pub fn command(program: impl Into<PathBuf>, args: &[&str]) -> Self {
        RunnerConfig::Command { program: program.into(), args: args.iter().map(|s| s.to_string()).collect() }
    }
}

pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("failed to start runner: {0}")]
    Spawn(String),
    #[error("runner did not complete the handshake in time")]
    HandshakeTimeout,
    #[error("bad handshake: {0}")]
    Handshake(String),
    #[error("runner speaks protocol version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("call exceeded its deadline; runner terminated")]
    Timeout,
    #[error("runner session is dead")]
    SessionDead,
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("no program loaded in this session")]
    NotLoaded,
}

/// Why a typed call produced no grid.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunFailure {
    #[error("timed out")]
    Timeout,
    #[error("{kind:?}: {message}")]
    Exception { kind: ErrorKind, message: String },
    #[error("returned a grid that is not well-formed as {role:?}: {verdict}")]
    NotWellFormed { role: GridRole, verdict: GridVerdict },
    #[error(transparent)]
    Session(ExecError),
}

impl From<ExecError> for RunFailure {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::Timeout => RunFailure::Timeout,
            other => RunFailure::Session(other),
        }
    }
}

type Line = std::io::Result<String>;

/// One runner process (or fake) hosting at most one candidate program.
///
/// Calls strictly alternate request and response. A session may move
/// between threads between calls but is never shared during one.
pub struct Session {
    writer: Option<Box<dyn Write + Send>>,
    lines: Receiver<Line>,
    terminate: Option<Box<dyn FnOnce() + Send>>,
    next_id: u64,
    loaded: bool,
    dead: bool,
    task_started: Option<Instant>,
}

fn spawn_line_reader(reader: impl Read + Send + 'static) -> Receiver<Line> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    rx
}

/// Starts a runner and completes the handshake.
pub fn spawn_runner(config: &RunnerConfig) -> Result<Session, ExecError> {
    spawn_runner_with(config, DEFAULT_HANDSHAKE_TIMEOUT)
}

pub fn spawn_runner_with(config: &RunnerConfig, handshake_timeout: Duration) -> Result<Session, ExecError> {
    let mut session = match config {
        RunnerConfig::Fake => {
            let (req_r, req_w) = std::io::pipe().map_err(|e| ExecError::Spawn(e.to_string()))?;
            let (resp_r, resp_w) = std::io::pipe().map_err(|e| ExecError::Spawn(e.to_string()))?;
            let cancel = Arc::new(AtomicBool::new(false));
            let flag = cancel.clone();
            std::thread::Builder::new()
                .name("fake-runner".into())
                .spawn(move || {
                    let _ = fake::serve(BufReader::new(req_r), resp_w, &flag);
                })
                .map_err(|e| ExecError::Spawn(e.to_string()))?;
            Session::new(Box::new(req_w), spawn_line_reader(resp_r), Box::new(move || cancel.store(true, Ordering::SeqCst)))
        }
        RunnerConfig::Command { program, args } => {
            let mut child = Command::new(program)
                .args(args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|e| ExecError::Spawn(format!("{}: {e}", program.display())))?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            Session::new(
                Box::new(stdin),
                spawn_line_reader(stdout),
                Box::new(move || {
                    let _ = child.kill();
                    let _ = child.wait();
                }),
            )
        }
    };
    session.handshake(handshake_timeout)?;
    Ok(session)
}

impl Session {
    fn new(writer: Box<dyn Write + Send>, lines: Receiver<Line>, terminate: Box<dyn FnOnce() + Send>) -> Self {
        Session { writer: Some(writer), lines, terminate: Some(terminate), next_id: 1, loaded: false, dead: false, task_started: None }
    }

    fn handshake(&mut self, timeout: Duration) -> Result<(), ExecError> {
        let line = match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                self.kill();
                return Err(ExecError::Handshake(e.to_string()));
            }
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                return Err(ExecError::HandshakeTimeout);
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.kill();
                return Err(ExecError::Handshake("runner exited before the handshake".into()));
            }
        };
        let hello: Handshake = serde_json::from_str(&line).map_err(|e| {
            self.kill();
            ExecError::Handshake(format!("{e}: {line}"))
        })?;
        if hello.hello != RUNNER_HELLO {
            self.kill();
            return Err(ExecError::Handshake(format!("unexpected runner name {:?}", hello.hello)));
        }
        if hello.version != PROTOCOL_VERSION {
            self.kill();
            return Err(ExecError::VersionMismatch { found: hello.version, expected: PROTOCOL_VERSION });
        }
        Ok(())
    }

    pub fn is_alive(&self) -> bool {
        !self.dead
    }

    pub fn is_loaded(&self) -> bool {
        self.loaded
    }

    /// Terminates the runner and marks the session dead. Idempotent.
    pub fn kill(&mut self) {
        self.dead = true;
        self.writer = None;
        if let Some(t) = self.terminate.take() {
            t();
        }
    }

    fn deadline(&mut self, budget: &ExecutionBudget) -> Instant {
        let now = Instant::now();
        let started = *self.task_started.get_or_insert(now);
        (now + budget.per_call).min(started + budget.per_task)
    }

    fn exchange(&mut self, line: &str, deadline: Instant) -> Result<RunnerResponse, ExecError> {
        if self.dead {
            return Err(ExecError::SessionDead);
        }
        let writer = self.writer.as_mut().ok_or(ExecError::SessionDead)?;
        if writer.write_all(line.as_bytes()).and_then(|_| writer.flush()).is_err() {
            self.kill();
            return Err(ExecError::SessionDead);
        }
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(reply)) => serde_json::from_str(&reply).map_err(|e| {
                self.kill();
                ExecError::Protocol(format!("unparseable response ({e}): {reply}"))
            }),
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => {
                self.kill();
                Err(ExecError::SessionDead)
            }
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                Err(ExecError::Timeout)
            }
        }
    }

    /// Sends one request, assigning the next id, and waits for its response.
    pub fn call(&mut self, op: Op, payload: CallPayload, budget: &ExecutionBudget) -> Result<RunnerResponse, ExecError> {
        if self.dead {
            return Err(ExecError::SessionDead);
        }
        if matches!(op, Op::GenerateInput | Op::Main) && !self.loaded {
            return Err(ExecError::NotLoaded);
        }
        let id = self.next_id;
        self.next_id += 1;
        let request = RunnerRequest { id, op, code: payload.code, input: payload.input, seed: payload.seed };
        let deadline = self.deadline(budget);
        let response = self.exchange(&request.to_line(), deadline)?;
        if response.id != id {
            self.kill();
            return Err(ExecError::Protocol(format!("response id {} does not match request id {id}", response.id)));
        }
        if !response.ok && response.error_kind.is_none() {
            self.kill();
            return Err(ExecError::Protocol(format!("failed response {id} carries no error_kind")));
        }
        match op {
            Op::Load => self.loaded = response.ok,
            Op::Shutdown => self.kill(),
            _ => {}
        }
        Ok(response)
    }

    /// Writes an arbitrary line and returns the next response without id
    /// checks. Used by conformance suites to probe malformed-request
    /// handling.
    pub fn send_raw_line(&mut self, line: &str, budget: &ExecutionBudget) -> Result<RunnerResponse, ExecError> {
        let deadline = self.deadline(budget);
        let mut line = line.trim_end_matches('\n').to_string();
        line.push('\n');
        self.exchange(&line, deadline)
    }

    /// Loads a candidate program.
    pub fn load(&mut self, code: &str, budget: &ExecutionBudget) -> Result<(), RunFailure> {
        let r = self.call(Op::Load, CallPayload { code: Some(code.to_string()), ..Default::default() }, budget)?;
        failure(r).map(|_| ())
    }

    /// Runs `generate_input` and validates the result as an input grid.
    pub fn run_generate_input(&mut self, seed: u64, budget: &ExecutionBudget) -> Result<Grid, RunFailure> {
        let r = self.call(Op::GenerateInput, CallPayload { seed: Some(seed), ..Default::default() }, budget)?;
        self.grid_of(r, GridRole::Input)
    }

    /// Runs `main` and validates the result as an output grid.
    pub fn run_main(&mut self, input: &Grid, budget: &ExecutionBudget) -> Result<Grid, RunFailure> {
        let r = self.call(Op::Main, CallPayload { input: Some(input.clone()), ..Default::default() }, budget)?;
        self.grid_of(r, GridRole::Output)
    }

    /// Asks the runner to exit and releases it.
    pub fn shutdown(mut self) {
        if !self.dead {
            let budget = ExecutionBudget { per_call: Duration::from_secs(2), per_task: Duration::from_secs(2) };
            self.task_started = None;
            let _ = self.call(Op::Shutdown, CallPayload::default(), &budget);
        }
        self.kill();
    }

    fn grid_of(&mut self, r: RunnerResponse, role: GridRole) -> Result<Grid, RunFailure> {
        let id = r.id;
        let Some(raw) = failure(r)? else {
            self.kill();
            return Err(RunFailure::Session(ExecError::Protocol(format!("successful response {id} carries no grid"))));
        };
        Grid::from_raw(&RawMatrix::from_json(&raw), role).map_err(|verdict| RunFailure::NotWellFormed { role, verdict })
    }
}

fn failure(r: RunnerResponse) -> Result<Option<serde_json::Value>, RunFailure> {
    if r.ok {
        return Ok(r.grid);
    }
    Err(RunFailure::Exception {
        kind: r.error_kind.unwrap_or(ErrorKind::Exception),
        message: r.error.unwrap_or_default(),
    })
}

impl Drop for Session {
    fn drop(&mut self) {
        self.kill();
    }
}

/// Optional request fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CallPayload {
    pub code: Option<String>,
    pub input: Option<Grid>,
    pub seed: Option<u64>,
}
