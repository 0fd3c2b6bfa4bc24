use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Stdio};
use std::time::Instant;

use serde::Serialize;

use crate::exec::{execute, outputs_match, Relation, Schema};
use crate::sql::parse;

use super::{RepairOutcome, RepairStats, RepairStatus, RepairTask};

/// Environment variable naming the fallback command.
pub const FALLBACK_ENV: &str = "SQLMEND_FALLBACK_CMD";

#[derive(Serialize)]
struct FallbackInput<'a> {
    schema: &'a Schema,
    input_tables: BTreeMap<&'a str, &'a Relation>,
    expected_output: &'a Relation,
    question: &'a str,
}

/// Runs `hook` through `sh -c`, feeding the example as JSON on stdin, and
/// accepts the SQL it prints only if it reproduces the expected output.
pub fn external_fallback(task: &RepairTask<'_>, hook: Option<&str>) -> RepairOutcome {
    let started = Instant::now();
    let stats = |via| RepairStats { via_fallback: via, wall_time: started.elapsed(), ..Default::default() };
    let Some(hook) = hook.filter(|h| !h.trim().is_empty()) else {
        return RepairOutcome::failed(RepairStatus::Exhausted, stats(false), "no fallback");
    };
    let input = FallbackInput {
        schema: task.db.schema(),
        input_tables: task.db.tables().collect(),
        expected_output: &task.expected,
        question: &task.question,
    };
    let Ok(payload) = serde_json::to_vec(&input) else {
        return RepairOutcome::failed(RepairStatus::Exhausted, stats(true), "fallback failed");
    };
    let output = Command::new("sh")
        .arg("-c")
        .arg(hook)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .and_then(|mut child| {
            if let Some(mut stdin) = child.stdin.take() {
                // a hook that ignores stdin may close it early
                let _ = stdin.write_all(&payload);
            }
            child.wait_with_output()
        });
    let output = match output {
        Ok(o) if o.status.success() => o,
        _ => return RepairOutcome::failed(RepairStatus::Exhausted, stats(true), "fallback failed"),
    };
    let text = String::from_utf8_lossy(&output.stdout);
    let Ok(query) = parse(text.trim()) else {
        return RepairOutcome::failed(RepairStatus::Exhausted, stats(true), "fallback emitted invalid SQL");
    };
    match execute(&query, task.db) {
        Ok(out) if outputs_match(&out, &task.expected) => RepairOutcome {
            status: RepairStatus::Repaired,
            repaired_query: Some(query),
            mutations: Vec::new(),
            stats: stats(true),
            reason: None,
        },
        _ => RepairOutcome::failed(RepairStatus::Exhausted, stats(true), "fallback output mismatch"),
    }
}
