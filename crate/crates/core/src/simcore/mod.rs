//! Preemptive fixed-priority uniprocessor simulation.
//!
//! Three execution modes share one contract: baseline, true frequency
//! scaling (compute stretched to `ceil(L/φ)` ticks) and the slowdown
//! approximation (nominal compute plus a highest-priority burst routine).
//! [`simulate`] is event driven; [`brute_force_simulate`] walks every tick
//! and exists to cross-check it.

mod engine;
mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{ratio, stretch, Scalar};
use crate::slowdown::{BurstParams, SlowdownConfig, SlowdownError};
use crate::workload::{validate, Fingerprint, Segment, TaskId, TaskSpec, Tick, Workload};

pub use engine::simulate;
pub use oracle::{brute_force_cap, brute_force_simulate, brute_force_simulate_capped, DEFAULT_BRUTE_FORCE_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExecutionMode<T> {
    Baseline,
    TrueScaling { phi: T },
    Slowdown { config: SlowdownConfig },
}

impl<T: Scalar> ExecutionMode<T> {
    pub fn true_scaling(phi: T) -> Self {
        ExecutionMode::TrueScaling { phi }
    }

    pub fn slowdown(params: BurstParams) -> Self {
        ExecutionMode::Slowdown {
            config: SlowdownConfig::constant(params),
        }
    }

    /// Frequency fraction applied to task compute.
    pub fn compute_phi(&self) -> T {
        match self {
            ExecutionMode::TrueScaling { phi } => *phi,
            _ => T::one(),
        }
    }

    pub fn slowdown_config(&self) -> Option<&SlowdownConfig> {
        match self {
            ExecutionMode::Slowdown { config } => Some(config),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ExecutionMode::Baseline => "baseline".into(),
            ExecutionMode::TrueScaling { phi } => format!("true:{phi}"),
            ExecutionMode::Slowdown { config } => {
                format!("slowdown:{}/{}", config.default.execute, config.default.sleep)
            }
        }
    }
}

/// Who owns the processor during one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Idle,
    Routine,
    Task(TaskId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRecord {
    pub task_id: TaskId,
    pub job_index: u32,
    pub release: Tick,
    /// First tick after the job's last activity; `None` if still pending at
    /// the horizon.
    pub completion: Option<Tick>,
    pub absolute_deadline: Tick,
    pub missed: bool,
    /// Pending at the horizon with its deadline still ahead: excluded from
    /// the schedulability verdict.
    pub undecided: bool,
    /// Routine cycles starting while the job was pending.
    pub slowdown_activations_during: u64,
    pub busy_ticks: Tick,
    /// Wall time spent in hard waits.
    pub wait_ticks: Tick,
}

/// One routine cycle as it actually ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutineCycle {
    pub start: Tick,
    pub params: BurstParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace<T> {
    pub horizon: Tick,
    pub mode: ExecutionMode<T>,
    pub fingerprint: Fingerprint,
    pub attribution: Vec<Slot>,
    pub jobs: Vec<JobRecord>,
    pub cycles: Vec<RoutineCycle>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> Trace<T> {
    pub fn count(&self, slot: Slot) -> Tick {
        self.attribution.iter().filter(|s| **s == slot).count() as Tick
    }

    pub fn routine_ticks(&self) -> Tick {
        self.count(Slot::Routine)
    }

    pub fn task_ticks(&self) -> Tick {
        self.attribution
            .iter()
            .filter(|s| matches!(s, Slot::Task(_)))
            .count() as Tick
    }

    pub fn miss_count(&self) -> usize {
        self.jobs.iter().filter(|j| j.missed).count()
    }

    /// `prefix[t]` = routine ticks in `[0, t)`.
    pub fn routine_prefix(&self) -> Vec<Tick> {
        let mut prefix = Vec::with_capacity(self.attribution.len() + 1);
        prefix.push(0);
        let mut acc = 0;
        for s in &self.attribution {
            acc += Tick::from(*s == Slot::Routine);
            prefix.push(acc);
        }
        prefix
    }

    /// Routine cycle containing `tick`.
    pub fn cycle_at(&self, tick: Tick) -> Option<&RoutineCycle> {
        let idx = self.cycles.partition_point(|c| c.start <= tick);
        idx.checked_sub(1).map(|i| &self.cycles[i])
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("frequency fraction must be in (0, 1], got {0}")]
    InvalidPhi(String),
    #[error(transparent)]
    Slowdown(#[from] SlowdownError),
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("brute-force cap exceeded: horizon x tasks = {need} > {cap} (set FREQSIM_CAP to raise it)")]
    CapExceeded { need: u64, cap: u64 },
}

/// One step of a job body as the simulator sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Step {
    /// Service ticks needed in the current mode.
    Compute(Tick),
    /// Wall-clock wait.
    Wait(Tick),
}

pub(crate) fn check_inputs<T: Scalar>(workload: &Workload, mode: &ExecutionMode<T>) -> Result<(), SimError> {
    let report = validate(workload);
    if let Some(issue) = report.errors.first() {
        return Err(SimError::InvalidWorkload(issue.to_string()));
    }
    match mode {
        ExecutionMode::Baseline => Ok(()),
        ExecutionMode::TrueScaling { phi } => {
            if *phi > T::zero() && *phi <= T::one() {
                Ok(())
            } else {
                Err(SimError::InvalidPhi(phi.to_string()))
            }
        }
        ExecutionMode::Slowdown { config } => Ok(config.check_against(workload)?),
    }
}

pub(crate) fn plan<T: Scalar>(task: &TaskSpec, mode: &ExecutionMode<T>) -> Vec<Step> {
    let phi = mode.compute_phi();
    task.body
        .iter()
        .map(|seg| match *seg {
            Segment::Compute(n) => Step::Compute(stretch(n, phi)),
            Segment::HardWait(n) => Step::Wait(n),
        })
        .collect()
}

pub(crate) fn new_record(task: &TaskSpec, job_index: u32, release: Tick) -> JobRecord {
    JobRecord {
        task_id: task.id,
        job_index,
        release,
        completion: None,
        absolute_deadline: release + task.deadline,
        missed: false,
        undecided: false,
        slowdown_activations_during: 0,
        busy_ticks: 0,
        wait_ticks: 0,
    }
}

/// Sets verdict fields, sorts jobs canonically and collects warnings.
pub(crate) fn settle(jobs: &mut [JobRecord], horizon: Tick) -> Vec<String> {
    jobs.sort_by_key(|j| (j.task_id, j.job_index));
    let mut undecided = 0usize;
    for job in jobs.iter_mut() {
        match job.completion {
            Some(done) => job.missed = done > job.absolute_deadline,
            None if job.absolute_deadline <= horizon => job.missed = true,
            None => {
                job.undecided = true;
                undecided += 1;
            }
        }
    }
    if undecided > 0 {
        vec![format!(
            "{undecided} job(s) pending at the horizon with deadlines beyond it; excluded from the verdict"
        )]
    } else {
        Vec::new()
    }
}

/// Share of ticks spent on task work; routine ticks are excluded.
pub fn measure_utilization<T: Scalar>(trace: &Trace<T>) -> T {
    if !matches!(trace.mode, ExecutionMode::Baseline) {
        log::warn!(
            "measuring utilization of a {} trace; baseline is expected",
            trace.mode.label()
        );
    }
    ratio(trace.task_ticks(), trace.horizon)
}

#[cfg(test)]
mod tests;
