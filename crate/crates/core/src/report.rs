//! JSON report envelope shared by every CLI subcommand.
//!
//! Everything outside `meta` is a pure function of the inputs; `meta` holds
//! the wall-clock timestamp and tool version.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scalar::{ratio, Scalar};
use crate::search::is_schedulable;
use crate::simcore::{measure_utilization, ExecutionMode, JobRecord, RoutineCycle, Slot, Trace};
use crate::workload::{Fingerprint, Tick, RNG_ALGORITHM};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub generated_at_unix: u64,
}

impl Meta {
    pub fn now() -> Self {
        Meta {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report<R> {
    pub schema_version: u32,
    pub command: String,
    pub fingerprint: Option<Fingerprint>,
    pub rng_algorithm: String,
    pub result: R,
    pub meta: Meta,
}

impl<R: Serialize> Report<R> {
    pub fn new(command: &str, fingerprint: Option<Fingerprint>, result: R) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            fingerprint,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            result,
            meta: Meta::now(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Report JSON with the `meta` block removed, for determinism checks.
pub fn strip_meta(json: &str) -> serde_json::Result<Value> {
    let mut v: Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("meta");
    }
    Ok(v)
}

/// A run of consecutive ticks with the same owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub start: Tick,
    pub len: Tick,
    pub slot: Slot,
}

pub fn run_length(attribution: &[Slot]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (t, slot) in attribution.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.slot == *slot => run.len += 1,
            _ => runs.push(Run {
                start: t as Tick,
                len: 1,
                slot: *slot,
            }),
        }
    }
    runs
}

pub fn expand_runs(runs: &[Run]) -> Vec<Slot> {
    runs.iter()
        .flat_map(|r| std::iter::repeat_n(r.slot, r.len as usize))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMetrics<T> {
    pub jobs: usize,
    pub finished: usize,
    pub missed: usize,
    pub undecided: usize,
    pub schedulable: bool,
    pub task_utilization: T,
    pub routine_fraction: T,
    pub routine_cycles: usize,
}

pub fn trace_metrics<T: Scalar>(trace: &Trace<T>) -> TraceMetrics<T> {
    let task_utilization = if matches!(trace.mode, ExecutionMode::Baseline) {
        measure_utilization(trace)
    } else {
        ratio(trace.task_ticks(), trace.horizon)
    };
    TraceMetrics {
        jobs: trace.jobs.len(),
        finished: trace.jobs.iter().filter(|j| j.completion.is_some()).count(),
        missed: trace.miss_count(),
        undecided: trace.jobs.iter().filter(|j| j.undecided).count(),
        schedulable: is_schedulable(trace),
        task_utilization,
        routine_fraction: ratio(trace.routine_ticks(), trace.horizon),
        routine_cycles: trace.cycles.len(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceReport<T> {
    pub mode: ExecutionMode<T>,
    pub horizon: Tick,
    pub metrics: TraceMetrics<T>,
    pub jobs: Vec<JobRecord>,
    pub warnings: Vec<String>,
    /// Present only when requested; can be large.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles: Option<Vec<RoutineCycle>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attribution: Option<Vec<Run>>,
}

pub fn trace_report<T: Scalar>(trace: &Trace<T>, full: bool) -> TraceReport<T> {
    TraceReport {
        mode: trace.mode.clone(),
        horizon: trace.horizon,
        metrics: trace_metrics(trace),
        jobs: trace.jobs.clone(),
        warnings: trace.warnings.clone(),
        cycles: full.then(|| trace.cycles.clone()),
        attribution: full.then(|| run_length(&trace.attribution)),
    }
}
