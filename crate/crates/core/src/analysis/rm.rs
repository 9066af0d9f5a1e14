//! Rate-monotonic utilization-bound comparator.

use serde::{Deserialize, Serialize};

use crate::scalar::{stretch, Scalar};
use crate::workload::{ArrivalModel, Tick, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmVerdict {
    Schedulable,
    /// Above the bound; the bound is sufficient, not necessary.
    Inconclusive,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmCheck<T> {
    pub verdict: RmVerdict,
    pub utilization: Option<T>,
    pub bound: Option<T>,
    pub reason: Option<String>,
}

impl<T> RmCheck<T> {
    fn not_applicable(reason: impl Into<String>) -> Self {
        RmCheck {
            verdict: RmVerdict::NotApplicable,
            utilization: None,
            bound: None,
            reason: Some(reason.into()),
        }
    }
}

/// `n (2^(1/n) − 1)`.
pub fn liu_layland_bound<T: Scalar>(n: usize) -> T {
    if n == 0 {
        return T::one();
    }
    let n = T::from_usize(n).expect("task count");
    n * (T::lit(2.0).powf(T::one() / n) - T::one())
}

/// Utilization-bound test at frequency fraction `phi`.
///
/// Applies only to jitter-free periodic, wait-free task sets with implicit
/// deadlines in rate-monotonic priority order. Each task contributes its
/// stretched demand `ceil(C/φ)` over its period, matching the simulator's
/// integer service model.
pub fn rm_utilization_check<T: Scalar>(workload: &Workload, phi: T) -> RmCheck<T> {
    if !(phi > T::zero() && phi <= T::one()) {
        return RmCheck::not_applicable(format!("frequency fraction {phi} outside (0, 1]"));
    }
    let mut periodic: Vec<(i32, Tick, Tick)> = Vec::with_capacity(workload.tasks.len());
    for task in &workload.tasks {
        let ArrivalModel::Periodic { period, jitter, .. } = task.arrivals else {
            return RmCheck::not_applicable(format!("task {} is not periodic", task.id));
        };
        if jitter != 0 {
            return RmCheck::not_applicable(format!("task {} has release jitter", task.id));
        }
        if task.has_waits() {
            return RmCheck::not_applicable(format!("task {} has hard waits", task.id));
        }
        if task.deadline != period {
            return RmCheck::not_applicable(format!("task {} deadline differs from its period", task.id));
        }
        periodic.push((task.priority, period, task.compute_demand()));
    }
    periodic.sort_by_key(|&(priority, _, _)| priority);
    if periodic.windows(2).any(|w| w[0].1 > w[1].1) {
        return RmCheck::not_applicable("priorities are not in rate-monotonic order");
    }

    let utilization = periodic
        .iter()
        .map(|&(_, period, compute)| T::from_ticks(stretch(compute, phi)) / T::from_ticks(period))
        .fold(T::zero(), |a, b| a + b);
    let bound = liu_layland_bound::<T>(periodic.len());
    RmCheck {
        verdict: if utilization <= bound {
            RmVerdict::Schedulable
        } else {
            RmVerdict::Inconclusive
        },
        utilization: Some(utilization),
        bound: Some(bound),
        reason: None,
    }
}
