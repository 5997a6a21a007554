//! Running candidate programs out of process.
//!
//! The orchestrator talks to a runner over newline-delimited JSON on stdio
//! (see [`protocol`]). One session hosts one candidate; a timeout kills the
//! runner and the session stays dead. [`RunnerConfig::Fake`] substitutes a
//! scripted in-process runner so everything above this layer is testable
//! without Python.

pub mod conformance;
pub mod fake;
pub mod programs;
pub mod protocol;
mod session;

pub use protocol::{ErrorKind, ExecutionBudget, Handshake, Op, RunnerRequest, RunnerResponse, PROTOCOL_VERSION};
pub use session::{
    spawn_runner, spawn_runner_with, CallPayload, ExecError, RunFailure, RunnerConfig, Session,
    DEFAULT_HANDSHAKE_TIMEOUT,
};
