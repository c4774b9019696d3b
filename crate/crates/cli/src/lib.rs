//! Orchestration behind the `vidret` command: aggregation, evaluation and
//! length/rank analysis runs over `.frem` archives and JSONL manifests.

pub mod commands;
pub mod pipeline;

pub use commands::{cmd_aggregate, cmd_analyze, cmd_evaluate, ReportFormat, RunConfig};
pub use pipeline::{aggregate_archive, evaluate_corpus, Evaluation, Task, VideoSet};

use vidret_core::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PROTOCOL: i32 = 3;

/// Process exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_protocol() {
        EXIT_PROTOCOL
    } else {
        EXIT_INPUT
    }
}
