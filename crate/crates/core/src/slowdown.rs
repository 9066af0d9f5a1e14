//! Slowdown-routine parameterization.
//!
//! The routine alternates an execute burst of `E` ticks with a sleep of `S`
//! ticks at a priority above every task. It consumes `E/(E+S)` of the
//! processor, which models a processor running at `S/(E+S)` of nominal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{ratio, Scalar};
use crate::simcore::{ExecutionMode, Slot, Trace};
use crate::workload::{Issue, TaskId, Tick, Workload};

/// Interval length, in routine cycles, below which a per-interval schedule
/// no longer tracks its specified frequency closely.
pub const MIN_INTERVAL_CYCLES: u64 = 50;

/// Routine activations per job needed for a stable overhead.
pub const COVERAGE_ACTIVATIONS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstParams {
    pub execute: Tick,
    pub sleep: Tick,
}

impl BurstParams {
    pub const fn new(execute: Tick, sleep: Tick) -> Self {
        BurstParams { execute, sleep }
    }

    pub fn cycle(&self) -> Tick {
        self.execute + self.sleep
    }

    /// Same ratio with every burst `factor` times longer.
    pub fn scaled(&self, factor: Tick) -> Self {
        BurstParams::new(self.execute * factor, self.sleep * factor)
    }

    fn check(&self, field: &str) -> Result<(), SlowdownError> {
        if self.execute == 0 || self.sleep == 0 {
            return Err(SlowdownError::Invalid(format!(
                "{field}: execute and sleep must both be at least 1 (got {}/{})",
                self.execute, self.sleep
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalParams {
    pub start: Tick,
    pub end: Tick,
    pub params: BurstParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    #[default]
    Constant,
    PerTask {
        #[serde(with = "task_keys")]
        tasks: BTreeMap<TaskId, BurstParams>,
    },
    /// Sorted, non-overlapping `[start, end)` intervals.
    PerInterval {
        intervals: Vec<IntervalParams>,
    },
}

// JSON object keys are strings; tagged enums buffer them, so integer keys
// have to be parsed by hand.
mod task_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::BurstParams;
    use crate::workload::TaskId;

    pub fn serialize<S: Serializer>(map: &BTreeMap<TaskId, BurstParams>, s: S) -> Result<S::Ok, S::Error> {
        map.iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<String, BurstParams>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<TaskId, BurstParams>, D::Error> {
        BTreeMap::<String, BurstParams>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.parse::<TaskId>()
                    .map(|id| (id, v))
                    .map_err(|_| D::Error::custom(format!("task key {k:?} is not a task id")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowdownConfig {
    pub default: BurstParams,
    #[serde(default)]
    pub schedule: Schedule,
}

impl SlowdownConfig {
    pub fn constant(params: BurstParams) -> Self {
        SlowdownConfig {
            default: params,
            schedule: Schedule::Constant,
        }
    }

    pub fn max_cycle(&self) -> Tick {
        let others = match &self.schedule {
            Schedule::Constant => 0,
            Schedule::PerTask { tasks } => tasks.values().map(BurstParams::cycle).max().unwrap_or(0),
            Schedule::PerInterval { intervals } => intervals
                .iter()
                .map(|i| i.params.cycle())
                .max()
                .unwrap_or(0),
        };
        self.default.cycle().max(others)
    }

    fn all_params(&self) -> Vec<(String, BurstParams)> {
        let mut out = vec![("default".to_string(), self.default)];
        match &self.schedule {
            Schedule::Constant => {}
            Schedule::PerTask { tasks } => {
                out.extend(tasks.iter().map(|(id, p)| (format!("schedule.tasks.{id}"), *p)));
            }
            Schedule::PerInterval { intervals } => {
                out.extend(
                    intervals
                        .iter()
                        .enumerate()
                        .map(|(i, iv)| (format!("schedule.intervals[{i}]"), iv.params)),
                );
            }
        }
        out
    }

    /// Hard invariants only: positive bursts, well-formed intervals.
    pub fn check(&self) -> Result<(), SlowdownError> {
        for (field, p) in self.all_params() {
            p.check(&field)?;
        }
        if let Schedule::PerInterval { intervals } = &self.schedule {
            for (i, iv) in intervals.iter().enumerate() {
                if iv.start >= iv.end {
                    return Err(SlowdownError::Invalid(format!(
                        "schedule.intervals[{i}]: start {} must be before end {}",
                        iv.start, iv.end
                    )));
                }
            }
            if intervals.windows(2).any(|w| w[0].end > w[1].start) {
                return Err(SlowdownError::Invalid(
                    "schedule.intervals: intervals must be sorted and non-overlapping".into(),
                ));
            }
        }
        Ok(())
    }

    /// Like [`check`](Self::check), plus task references against `workload`.
    pub fn check_against(&self, workload: &Workload) -> Result<(), SlowdownError> {
        self.check()?;
        if let Schedule::PerTask { tasks } = &self.schedule {
            if let Some(id) = tasks.keys().find(|id| workload.task(**id).is_none()) {
                return Err(SlowdownError::Invalid(format!(
                    "schedule.tasks.{id}: no such task in workload"
                )));
            }
        }
        Ok(())
    }

    /// Soft conditions under which the approximation loses accuracy. These
    /// never block a run.
    pub fn warnings(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        for (field, p) in self.all_params() {
            let overhead: f64 = overhead_fraction(p);
            if !(0.10..=0.90).contains(&overhead) {
                out.push(Issue {
                    field,
                    message: format!("overhead {overhead:.3} outside the 10-90% range"),
                });
            }
        }
        if let Schedule::PerInterval { intervals } = &self.schedule {
            for (i, iv) in intervals.iter().enumerate() {
                let needed = MIN_INTERVAL_CYCLES * iv.params.cycle();
                if iv.end - iv.start < needed {
                    out.push(Issue {
                        field: format!("schedule.intervals[{i}]"),
                        message: format!(
                            "interval length {} shorter than {MIN_INTERVAL_CYCLES} routine cycles ({needed})",
                            iv.end - iv.start
                        ),
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SlowdownError {
    #[error("invalid slowdown config: {0}")]
    Invalid(String),
    #[error("max_cycle must be at least 2 (got {0})")]
    CycleTooShort(Tick),
    #[error("target frequency fraction must be in (0, 1), got {0}")]
    TargetOutOfRange(String),
    #[error("distortion metrics need a slowdown-mode trace")]
    ModeMismatch,
    #[error("window {window} shorter than the longest routine cycle {cycle}")]
    WindowTooShort { window: Tick, cycle: Tick },
}

/// CPU share taken by the routine: `E / (E + S)`.
pub fn overhead_fraction<T: Scalar>(params: BurstParams) -> T {
    ratio(params.execute, params.cycle())
}

/// Modeled frequency `S / (E + S) · f_nominal`.
///
/// Computed as `1 − overhead` so that the two fractions add up to exactly 1.
pub fn modeled_frequency<T: Scalar>(params: BurstParams, f_nominal: T) -> T {
    (T::one() - overhead_fraction::<T>(params)) * f_nominal
}

/// Burst parameters whose modeled fraction `S/(E+S)` is closest to
/// `target_phi`, scanning every cycle length up to `max_cycle`. Ties go to
/// the shorter cycle, then to the shorter execute burst.
pub fn params_for_target<T: Scalar>(target_phi: T, max_cycle: Tick) -> Result<BurstParams, SlowdownError> {
    if max_cycle < 2 {
        return Err(SlowdownError::CycleTooShort(max_cycle));
    }
    if !(target_phi > T::zero() && target_phi < T::one()) {
        return Err(SlowdownError::TargetOutOfRange(target_phi.to_string()));
    }
    let mut best = BurstParams::new(1, 1);
    let mut best_err = T::infinity();
    // Ascending cycle, then ascending execute: strict `<` keeps the first
    // minimiser, which is the tie-break order.
    for cycle in 2..=max_cycle {
        for execute in 1..cycle {
            let p = BurstParams::new(execute, cycle - execute);
            let err = (modeled_frequency(p, T::one()) - target_phi).abs();
            if err < best_err {
                best = p;
                best_err = err;
            }
        }
    }
    Ok(best)
}

/// Parameters in force for a routine cycle starting at `now`.
///
/// `running_candidate` is the highest-priority ready task at the cycle
/// start; it only matters for per-task schedules.
pub fn active_params(config: &SlowdownConfig, now: Tick, running_candidate: Option<TaskId>) -> BurstParams {
    match &config.schedule {
        Schedule::Constant => config.default,
        Schedule::PerTask { tasks } => running_candidate
            .and_then(|id| tasks.get(&id).copied())
            .unwrap_or(config.default),
        Schedule::PerInterval { intervals } => {
            let idx = intervals.partition_point(|iv| iv.end <= now);
            match intervals.get(idx) {
                Some(iv) if iv.start <= now => iv.params,
                _ => config.default,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport<T> {
    /// Finished jobs that saw at least ten routine activations.
    pub coverage10: T,
    /// Finished jobs shorter than the sleep time that absorbed no routine tick.
    pub escaped: T,
    /// Worst per-window gap between observed and specified routine share.
    pub variation: T,
    pub finished_jobs: usize,
    pub escaped_jobs: usize,
    pub window: Tick,
    pub windows: usize,
}

fn slowdown_trace<T: Scalar>(trace: &Trace<T>) -> Result<&SlowdownConfig, SlowdownError> {
    match &trace.mode {
        ExecutionMode::Slowdown { config } => Ok(config),
        _ => Err(SlowdownError::ModeMismatch),
    }
}

/// Approximation-quality metrics of a slowdown-mode trace.
///
/// Windows tile `[0, horizon)`; a trailing partial window is dropped.
pub fn distortion_metrics<T: Scalar>(trace: &Trace<T>, window: Tick) -> Result<DistortionReport<T>, SlowdownError> {
    let config = slowdown_trace(trace)?;
    let cycle = config.max_cycle();
    if window < cycle {
        return Err(SlowdownError::WindowTooShort { window, cycle });
    }

    let routine_prefix = trace.routine_prefix();
    let routine_between = |a: Tick, b: Tick| routine_prefix[b as usize] - routine_prefix[a as usize];

    let mut finished = 0usize;
    let mut covered = 0usize;
    let mut escaped = 0usize;
    for job in &trace.jobs {
        let Some(done) = job.completion else { continue };
        finished += 1;
        if job.slowdown_activations_during >= COVERAGE_ACTIVATIONS {
            covered += 1;
        }
        let sleep = trace
            .cycle_at(job.release)
            .map(|c| c.params.sleep)
            .unwrap_or(config.default.sleep);
        if done - job.release < sleep && routine_between(job.release, done) == 0 {
            escaped += 1;
        }
    }

    let windows = (trace.horizon / window) as usize;
    let mut specified = vec![T::zero(); windows];
    for c in &trace.cycles {
        let share: T = overhead_fraction(c.params);
        let end = (c.start + c.params.cycle()).min(trace.horizon);
        let mut s = c.start;
        while s < end {
            let w = (s / window) as usize;
            let stop = end.min((w as Tick + 1) * window);
            if w < windows {
                specified[w] = specified[w] + share * T::from_ticks(stop - s);
            }
            s = stop;
        }
    }
    let variation = (0..windows)
        .map(|w| {
            let a = w as Tick * window;
            let observed: T = ratio(routine_between(a, a + window), window);
            (observed - specified[w] / T::from_ticks(window)).abs()
        })
        .fold(T::zero(), T::max);

    Ok(DistortionReport {
        coverage10: ratio(covered as u64, finished as u64),
        escaped: ratio(escaped as u64, finished as u64),
        variation,
        finished_jobs: finished,
        escaped_jobs: escaped,
        window,
        windows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalFraction<T> {
    pub start: Tick,
    pub end: Tick,
    pub specified: T,
    pub observed: T,
}

/// Observed routine share inside each interval of a per-interval schedule
/// (clipped to the horizon).
pub fn interval_fractions<T: Scalar>(trace: &Trace<T>) -> Result<Vec<IntervalFraction<T>>, SlowdownError> {
    let config = slowdown_trace(trace)?;
    let Schedule::PerInterval { intervals } = &config.schedule else {
        return Ok(Vec::new());
    };
    Ok(intervals
        .iter()
        .filter(|iv| iv.start < trace.horizon)
        .map(|iv| {
            let end = iv.end.min(trace.horizon);
            let routine = trace.attribution[iv.start as usize..end as usize]
                .iter()
                .filter(|s| **s == Slot::Routine)
                .count() as u64;
            IntervalFraction {
                start: iv.start,
                end,
                specified: overhead_fraction(iv.params),
                observed: ratio(routine, end - iv.start),
            }
        })
        .collect())
}
