//! Task/event data model, workload documents and validation.

mod arrivals;
pub mod gen;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use arrivals::{generate_arrivals, RNG_ALGORITHM};

/// Ticks of simulated time.
pub type Tick = u64;

pub type TaskId = u32;

/// One step of a job body.
///
/// Compute lengths are costs at nominal frequency; wait lengths are
/// wall-clock and never scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    #[serde(rename = "compute")]
    Compute(Tick),
    #[serde(rename = "wait")]
    HardWait(Tick),
}

impl Segment {
    pub fn len(&self) -> Tick {
        match *self {
            Segment::Compute(n) | Segment::HardWait(n) => n,
        }
    }

    pub fn is_compute(&self) -> bool {
        matches!(self, Segment::Compute(_))
    }
}

fn is_zero(x: &Tick) -> bool {
    *x == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalModel {
    Periodic {
        period: Tick,
        #[serde(default, skip_serializing_if = "is_zero")]
        phase: Tick,
        #[serde(default, skip_serializing_if = "is_zero")]
        jitter: Tick,
    },
    Poisson {
        mean_gap: Tick,
        min_gap: Tick,
    },
    Trace {
        releases: Vec<Tick>,
    },
}

impl ArrivalModel {
    pub fn periodic(period: Tick) -> Self {
        ArrivalModel::Periodic {
            period,
            phase: 0,
            jitter: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: TaskId,
    /// Smaller value means higher priority.
    pub priority: i32,
    /// Relative deadline in ticks.
    pub deadline: Tick,
    pub arrivals: ArrivalModel,
    pub body: Vec<Segment>,
}

impl TaskSpec {
    pub fn compute_demand(&self) -> Tick {
        self.body
            .iter()
            .filter(|s| s.is_compute())
            .map(Segment::len)
            .sum()
    }

    pub fn wait_demand(&self) -> Tick {
        self.body
            .iter()
            .filter(|s| !s.is_compute())
            .map(Segment::len)
            .sum()
    }

    pub fn has_waits(&self) -> bool {
        self.body.iter().any(|s| !s.is_compute())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub tasks: Vec<TaskSpec>,
    pub horizon: Tick,
    #[serde(default)]
    pub seed: u64,
}

impl Workload {
    pub fn has_waits(&self) -> bool {
        self.tasks.iter().any(TaskSpec::has_waits)
    }

    pub fn task(&self, id: TaskId) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Canonical JSON used for hashing and `parse(serialize(w)) == w`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workload serializes")
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let canonical = serde_json::to_vec(self).expect("workload serializes");
        let digest = Sha256::digest(&canonical);
        Fingerprint {
            seed: self.seed,
            content_hash: hex::encode(&digest[..16]),
        }
    }

    /// Σ over periodic tasks of compute demand / period.
    pub fn nominal_utilization(&self) -> f64 {
        self.tasks
            .iter()
            .filter_map(|t| match t.arrivals {
                ArrivalModel::Periodic { period, .. } if period > 0 => {
                    Some(t.compute_demand() as f64 / period as f64)
                }
                _ => None,
            })
            .fold(0.0, |a, b| a + b)
    }
}

/// Provenance stamp embedded in traces and reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub seed: u64,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl Issue {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Issue {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
    pub utilization: f64,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", first_issue(.0))]
    Semantic(Vec<Issue>),
}

fn first_issue(issues: &[Issue]) -> String {
    match issues {
        [] => "invalid workload".to_string(),
        [one] => one.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
    }
}

impl From<serde_json::Error> for WorkloadError {
    fn from(e: serde_json::Error) -> Self {
        WorkloadError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Parses and validates a workload JSON document. Unknown top-level keys
/// (such as `slowdown` or `energy` in a scenario file) are ignored.
pub fn parse_workload(text: &str) -> Result<Workload, WorkloadError> {
    let workload: Workload = serde_json::from_str(text)?;
    let report = validate(&workload);
    if report.is_ok() {
        Ok(workload)
    } else {
        Err(WorkloadError::Semantic(report.errors))
    }
}

pub fn validate(workload: &Workload) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    if workload.horizon == 0 {
        errors.push(Issue::new("horizon", "horizon must be at least 1"));
    }

    let mut ids = BTreeSet::new();
    let mut priorities = BTreeSet::new();
    for (i, task) in workload.tasks.iter().enumerate() {
        let at = |field: &str| format!("tasks[{i}].{field}");
        if !ids.insert(task.id) {
            errors.push(Issue::new(at("id"), format!("duplicate id {}", task.id)));
        }
        if !priorities.insert(task.priority) {
            errors.push(Issue::new(
                at("priority"),
                format!("duplicate priority {}", task.priority),
            ));
        }
        if task.deadline == 0 {
            errors.push(Issue::new(at("deadline"), "deadline must be at least 1"));
        }
        if task.body.is_empty() {
            errors.push(Issue::new(at("body"), "body non-empty"));
        } else if !task.body.iter().any(Segment::is_compute) {
            errors.push(Issue::new(at("body"), "body needs at least one compute segment"));
        }
        for (j, seg) in task.body.iter().enumerate() {
            if seg.len() == 0 {
                errors.push(Issue::new(
                    format!("tasks[{i}].body[{j}]"),
                    "segment length must be at least 1",
                ));
            }
        }
        match &task.arrivals {
            ArrivalModel::Periodic {
                period,
                phase,
                jitter,
            } => {
                if *period == 0 {
                    errors.push(Issue::new(at("arrivals.period"), "zero period"));
                } else if jitter >= period {
                    errors.push(Issue::new(
                        at("arrivals.jitter"),
                        format!("jitter {jitter} must be smaller than period {period}"),
                    ));
                }
                if workload.horizon > 0 && *phase >= workload.horizon {
                    warnings.push(Issue::new(
                        at("arrivals.phase"),
                        "phase beyond horizon; task never releases",
                    ));
                }
            }
            ArrivalModel::Poisson { mean_gap, min_gap } => {
                if *mean_gap == 0 {
                    errors.push(Issue::new(at("arrivals.mean_gap"), "mean_gap must be at least 1"));
                }
                if *min_gap == 0 {
                    errors.push(Issue::new(at("arrivals.min_gap"), "min_gap must be at least 1"));
                }
                if min_gap > mean_gap {
                    errors.push(Issue::new(
                        at("arrivals.min_gap"),
                        format!("min_gap {min_gap} exceeds mean_gap {mean_gap}"),
                    ));
                }
            }
            ArrivalModel::Trace { releases } => {
                if releases.windows(2).any(|w| w[0] >= w[1]) {
                    errors.push(Issue::new(
                        at("arrivals.releases"),
                        "releases must be strictly increasing",
                    ));
                }
                if releases.iter().any(|&r| r >= workload.horizon) {
                    warnings.push(Issue::new(
                        at("arrivals.releases"),
                        "releases at or beyond the horizon are dropped",
                    ));
                }
            }
        }
    }

    let utilization = workload.nominal_utilization();
    if utilization > 1.0 {
        warnings.push(Issue::new(
            "tasks",
            format!("utilization {utilization} exceeds 1"),
        ));
    }

    ValidationReport {
        errors,
        warnings,
        utilization,
    }
}
