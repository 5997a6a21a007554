//! Wire types of runner protocol v1: one JSON object per line over stdio.
//!
//! The runner first writes the handshake line
//! `{"hello":"arcforge-runner","version":1}`. Every later line is a response
//! to exactly one request. A runner that cannot parse a request line
//! answers with `error_kind: "malformed"` and id 0; sessions number real
//! requests from 1.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::grid::Grid;

pub const PROTOCOL_VERSION: u32 = 1;
pub const RUNNER_HELLO: &str = "arcforge-runner";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handshake {
    pub hello: String,
    pub version: u32,
}

impl Handshake {
    pub fn current() -> Self {
        Handshake { hello: RUNNER_HELLO.to_string(), version: PROTOCOL_VERSION }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Load,
    GenerateInput,
    Main,
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunnerRequest {
    pub id: u64,
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunnerRequest {
    pub fn load(id: u64, code: &str) -> Self {
        RunnerRequest { id, op: Op::Load, code: Some(code.to_string()), input: None, seed: None }
    }

    pub fn generate_input(id: u64, seed: u64) -> Self {
        RunnerRequest { id, op: Op::GenerateInput, code: None, input: None, seed: Some(seed) }
    }

    pub fn main(id: u64, input: &Grid) -> Self {
        RunnerRequest { id, op: Op::Main, code: None, input: Some(input.clone()), seed: None }
    }

    pub fn shutdown(id: u64) -> Self {
        RunnerRequest { id, op: Op::Shutdown, code: None, input: None, seed: None }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("plain data");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Exception,
    Malformed,
    ImportDenied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerResponse {
    pub id: u64,
    pub ok: bool,
    /// The raw matrix as returned by the program; validated by the caller.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<ErrorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunnerResponse {
    pub fn ok(id: u64, grid: Option<Value>) -> Self {
        RunnerResponse { id, ok: true, grid, error_kind: None, error: None }
    }

    pub fn err(id: u64, kind: ErrorKind, message: impl Into<String>) -> Self {
        RunnerResponse { id, ok: false, grid: None, error_kind: Some(kind), error: Some(message.into()) }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("plain data");
        s.push('\n');
        s
    }
}

/// Time limits for one candidate. Each call's deadline is the earlier of
/// `per_call` from now and `per_task` from the first call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecutionBudget {
    pub per_call: Duration,
    pub per_task: Duration,
}

pub const DEFAULT_PER_CALL: Duration = Duration::from_secs(30);
pub const DEFAULT_PER_TASK: Duration = Duration::from_secs(300);

impl Default for ExecutionBudget {
    fn default() -> Self {
        ExecutionBudget { per_call: DEFAULT_PER_CALL, per_task: DEFAULT_PER_TASK }
    }
}

impl ExecutionBudget {
    /// A budget with the given task limit; the per-call limit is clamped so
    /// it never exceeds it.
    pub fn with_task_limit(per_task: Duration) -> Self {
        ExecutionBudget { per_call: DEFAULT_PER_CALL.min(per_task), per_task }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.per_call > self.per_task {
            return Err(format!("per-call deadline {:?} exceeds per-task deadline {:?}", self.per_call, self.per_task));
        }
        if self.per_call.is_zero() {
            return Err("per-call deadline must be positive".into());
        }
        Ok(())
    }
}
