//! Synthesis, sandboxed validation and analysis of ARC-style grid tasks
//! grounded in everyday analogies.
pub mod abstraction;
pub mod analytics;
pub mod cli;
pub mod config;
pub mod exec;
pub mod grid;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod retrieval;
pub mod schema;
pub mod task;
pub mod validate;
