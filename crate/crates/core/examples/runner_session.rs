//! Driving a runner session by hand: load, generate an input, run `main`,
//! and watch a deadline kill a runaway call.
//!
//! Run with `cargo run --example runner_session`. Set `ARCFORGE_RUNNER` to
//! an executable speaking the runner protocol to use it instead of the
//! scripted fake.

use std::time::Duration;

use arcforge::exec::{spawn_runner, ExecutionBudget, RunnerConfig};

const ROTATE: &str = "# fake-runner: rotate_90\ndef main(grid):\n    return grid\n\ndef generate_input():\n    return [[1]]\n";
const LOOP: &str = "# fake-runner: infinite_loop\ndef main(grid):\n    while True:\n        pass\n\ndef generate_input():\n    return [[1]]\n";

fn main() {
    let runner = match std::env::var("ARCFORGE_RUNNER") {
        Ok(cmd) => RunnerConfig::command(cmd, &[]),
        Err(_) => RunnerConfig::Fake,
    };
    let budget = ExecutionBudget { per_call: Duration::from_secs(1), per_task: Duration::from_secs(5) };

    let mut session = spawn_runner(&runner).expect("runner starts");
    session.load(ROTATE, &budget).expect("program loads");
    let input = session.run_generate_input(7, &budget).expect("generator runs");
    let output = session.run_main(&input, &budget).expect("main runs");
    println!("input  {:?}", input.to_rows());
    println!("output {:?}", output.to_rows());
    session.shutdown();

    let mut session = spawn_runner(&runner).expect("runner starts");
    session.load(LOOP, &budget).expect("program loads");
    let result = session.run_main(&input, &budget);
    println!("\nrunaway main: {result:?}");
    println!("session alive afterwards: {}", session.is_alive());
}
