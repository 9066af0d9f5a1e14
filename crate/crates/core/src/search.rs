//! Schedulability verdicts and the minimum-frequency bisection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::simcore::{measure_utilization, simulate, ExecutionMode, SimError, Trace};
use crate::slowdown::{modeled_frequency, params_for_target, BurstParams, SlowdownError};
use crate::workload::{Tick, Workload};

/// Lowest frequency fraction ever probed.
pub const PHI_FLOOR: f64 = 0.01;

/// True iff no job missed its deadline. Jobs left undecided at the horizon
/// do not count.
pub fn is_schedulable<T: Scalar>(trace: &Trace<T>) -> bool {
    !trace.jobs.iter().any(|j| j.missed)
}

/// Baseline utilization taken as the minimum frequency fraction.
///
/// This ignores every real-time constraint; it is only an estimate and a
/// warm start for the search.
pub fn naive_estimate<T: Scalar>(workload: &Workload) -> Result<T, SimError> {
    let trace = simulate(workload, &ExecutionMode::<T>::Baseline)?;
    Ok(measure_utilization(&trace).max(T::lit(PHI_FLOOR)).min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    TrueScaling,
    /// Slowdown approximation with the finest bursts up to `max_cycle`,
    /// each burst multiplied by `burst_scale`.
    Slowdown { max_cycle: Tick, burst_scale: Tick },
}

impl Family {
    pub fn slowdown(max_cycle: Tick) -> Self {
        Family::Slowdown {
            max_cycle,
            burst_scale: 1,
        }
    }

    /// Execution mode emulating frequency fraction `phi`. At `phi >= 1`
    /// both families reduce to the baseline.
    pub fn mode_for<T: Scalar>(&self, phi: T) -> Result<ExecutionMode<T>, SlowdownError> {
        if phi >= T::one() {
            return Ok(ExecutionMode::Baseline);
        }
        match *self {
            Family::TrueScaling => Ok(ExecutionMode::TrueScaling { phi }),
            Family::Slowdown {
                max_cycle,
                burst_scale,
            } => Ok(ExecutionMode::slowdown(
                params_for_target(phi, max_cycle)?.scaled(burst_scale.max(1)),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPoint<T> {
    /// Probe this fraction first.
    Fixed(T),
    /// Warm start at the naive estimate.
    Auto,
    /// Plain bisection from 0.5.
    Half,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions<T> {
    pub family: Family,
    pub tolerance: T,
    pub start: StartPoint<T>,
    /// Seeds `seed .. seed + repeats`; a probe passes only if all pass.
    pub repeats: u32,
}

impl<T: Scalar> SearchOptions<T> {
    pub fn new(family: Family, tolerance: T) -> Self {
        SearchOptions {
            family,
            tolerance,
            start: StartPoint::Auto,
            repeats: 1,
        }
    }

    pub fn start(mut self, start: StartPoint<T>) -> Self {
        self.start = start;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe<T> {
    pub phi: T,
    pub schedulable: bool,
    pub misses: usize,
    /// Burst parameters used for slowdown probes.
    pub params: Option<BurstParams>,
    /// Frequency those parameters actually model.
    pub modeled_phi: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult<T> {
    /// `None`: unschedulable even at nominal frequency.
    pub min_phi: Option<T>,
    pub probes: Vec<Probe<T>>,
    pub tolerance: T,
    pub family: Family,
    pub warm_start_phi: Option<T>,
    /// Waits make pass/fail possibly non-monotone in frequency; the result
    /// is then an estimate under a monotonicity assumption.
    pub assumes_monotonicity: bool,
}

impl<T: Scalar> SearchResult<T> {
    pub fn probe_phis(&self) -> Vec<T> {
        self.probes.iter().map(|p| p.phi).collect()
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("tolerance must be in (0, 1), got {0}")]
    Tolerance(String),
    #[error("repeat count must be at least 1")]
    Repeats,
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl From<SlowdownError> for SearchError {
    fn from(e: SlowdownError) -> Self {
        SearchError::Sim(SimError::Slowdown(e))
    }
}

/// Runs one probe at `phi` across all repeat seeds.
pub fn probe<T: Scalar>(workload: &Workload, family: Family, phi: T, repeats: u32) -> Result<Probe<T>, SearchError> {
    let mode = family.mode_for(phi)?;
    let mut misses = 0;
    for i in 0..repeats.max(1) {
        let mut w = workload.clone();
        w.seed = workload.seed.wrapping_add(u64::from(i));
        misses += simulate(&w, &mode)?.miss_count();
    }
    let params = mode.slowdown_config().map(|c| c.default);
    Ok(Probe {
        phi,
        schedulable: misses == 0,
        misses,
        params,
        modeled_phi: params.map(|p| modeled_frequency(p, T::one())),
    })
}

/// Bisection for the lowest schedulable frequency fraction.
///
/// Nominal frequency is verified first. The bracket starts as `(0, 1]`
/// with the upper end schedulable; probes are clamped to [`PHI_FLOOR`].
/// The search stops once the bracket is no wider than the tolerance and
/// reports its upper end.
pub fn min_frequency_search<T: Scalar>(
    workload: &Workload,
    options: &SearchOptions<T>,
) -> Result<SearchResult<T>, SearchError> {
    let tol = options.tolerance;
    if !(tol > T::zero() && tol < T::one()) {
        return Err(SearchError::Tolerance(tol.to_string()));
    }
    if options.repeats == 0 {
        return Err(SearchError::Repeats);
    }
    let family = options.family;
    let floor = T::lit(PHI_FLOOR);
    let mut result = SearchResult {
        min_phi: None,
        probes: Vec::new(),
        tolerance: tol,
        family,
        warm_start_phi: None,
        assumes_monotonicity: workload.has_waits(),
    };

    let nominal = probe(workload, family, T::one(), options.repeats)?;
    let ok = nominal.schedulable;
    result.probes.push(nominal);
    if !ok {
        return Ok(result);
    }

    let mut lo = T::zero();
    let mut hi = T::one();
    let first = match options.start {
        StartPoint::Fixed(p) => p,
        StartPoint::Half => T::lit(0.5),
        StartPoint::Auto => {
            let warm = naive_estimate::<T>(workload)?;
            result.warm_start_phi = Some(warm);
            warm
        }
    };
    let mut next = (first > lo && first < hi).then_some(first);

    while hi - lo > tol && hi > floor {
        let mid = (lo + hi) / T::lit(2.0);
        let phi = next.take().unwrap_or(mid).max(floor);
        let p = probe(workload, family, phi, options.repeats)?;
        if p.schedulable {
            hi = phi;
        } else {
            lo = phi;
        }
        result.probes.push(p);
    }
    result.min_phi = Some(hi);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::brute_force_simulate;
    use crate::workload::{ArrivalModel, Segment, TaskSpec};

    fn single(compute: Tick, deadline: Tick, period: Tick, horizon: Tick) -> Workload {
        Workload {
            tasks: vec![TaskSpec {
                id: 1,
                priority: 1,
                deadline,
                arrivals: ArrivalModel::periodic(period),
                body: vec![Segment::Compute(compute)],
            }],
            horizon,
            seed: 0,
        }
    }

    /// Smallest grid fraction k·step that is schedulable, by brute force.
    fn sweep_min(w: &Workload, step: f64) -> f64 {
        let n = (1.0 / step).round() as u64;
        (1..=n)
            .map(|k| k as f64 * step)
            .find(|&phi| {
                let mode = if phi >= 1.0 {
                    ExecutionMode::Baseline
                } else {
                    ExecutionMode::TrueScaling { phi }
                };
                is_schedulable(&brute_force_simulate(w, &mode).unwrap())
            })
            .unwrap()
    }

    #[test]
    fn verdicts() {
        let w = single(4, 8, 100, 100);
        assert!(is_schedulable(&simulate(&w, &ExecutionMode::true_scaling(0.5f64)).unwrap()));
        assert!(!is_schedulable(&simulate(&w, &ExecutionMode::true_scaling(0.49f64)).unwrap()));
    }

    #[test]
    fn two_task_set_below_sweep_minimum_fails() {
        let w = Workload {
            tasks: vec![
                TaskSpec {
                    id: 1,
                    priority: 1,
                    deadline: 10,
                    arrivals: ArrivalModel::periodic(10),
                    body: vec![Segment::Compute(2)],
                },
                TaskSpec {
                    id: 2,
                    priority: 2,
                    deadline: 25,
                    arrivals: ArrivalModel::periodic(25),
                    body: vec![Segment::Compute(6)],
                },
            ],
            horizon: 100,
            seed: 0,
        };
        let min = sweep_min(&w, 0.01);
        let below = ExecutionMode::TrueScaling { phi: min - 0.01 };
        assert!(!is_schedulable(&simulate(&w, &below).unwrap()));
        let at = ExecutionMode::TrueScaling { phi: min };
        assert!(is_schedulable(&simulate(&w, &at).unwrap()));
    }

    #[test]
    fn naive_estimate_examples() {
        let w = single(5, 10, 10, 100);
        assert_eq!(naive_estimate::<f64>(&w).unwrap(), 0.5);
        let idle = Workload {
            tasks: vec![],
            horizon: 10,
            seed: 0,
        };
        assert_eq!(naive_estimate::<f64>(&idle).unwrap(), PHI_FLOOR);

        // Utilization 0.04, yet any phi < 0.8 stretches 4 ticks past 5.
        let tight = single(4, 5, 100, 100);
        assert_eq!(naive_estimate::<f64>(&tight).unwrap(), 0.04);
        assert_eq!(sweep_min(&tight, 0.01), 0.8);
    }

    #[test]
    fn bisection_direction_from_half() {
        // Schedulable at 0.5: next probe goes down to 0.25.
        let pass = single(4, 8, 100, 100);
        let r = min_frequency_search(&pass, &SearchOptions::new(Family::TrueScaling, 0.01).start(StartPoint::Fixed(0.5))).unwrap();
        assert_eq!(&r.probe_phis()[..3], &[1.0, 0.5, 0.25]);

        // Unschedulable at 0.5: next probe goes up to 0.75.
        let fail = single(4, 5, 100, 100);
        let r = min_frequency_search(&fail, &SearchOptions::new(Family::TrueScaling, 0.01).start(StartPoint::Fixed(0.5))).unwrap();
        assert_eq!(&r.probe_phis()[..3], &[1.0, 0.5, 0.75]);
        let min = r.min_phi.unwrap();
        assert!((0.8..=0.81).contains(&min), "{min}");
    }

    #[test]
    fn search_finds_half() {
        let w = single(4, 8, 100, 100);
        let exact = min_frequency_search(&w, &SearchOptions::new(Family::TrueScaling, 0.01).start(StartPoint::Half)).unwrap();
        assert_eq!(exact.min_phi, Some(0.5));
        for start in [StartPoint::Auto, StartPoint::Half, StartPoint::Fixed(0.9)] {
            let r = min_frequency_search(&w, &SearchOptions::new(Family::TrueScaling, 0.01).start(start)).unwrap();
            let min = r.min_phi.unwrap();
            assert!((0.5..=0.51).contains(&min), "{start:?}: {min}");
            let bound = (1.0f64 / 0.01).log2().ceil() as usize + 2;
            assert!(r.probes.len() <= bound, "{} probes", r.probes.len());
        }
        let coarse = min_frequency_search(&w, &SearchOptions::new(Family::TrueScaling, 0.25).start(StartPoint::Half)).unwrap();
        assert!(coarse.probes.len() <= 4);
    }

    #[test]
    fn warm_start_recorded_and_f32_works() {
        let w = single(4, 8, 100, 100);
        let r = min_frequency_search(&w, &SearchOptions::new(Family::TrueScaling, 0.01f32)).unwrap();
        assert_eq!(r.warm_start_phi, Some(0.04));
        let min = r.min_phi.unwrap();
        assert!((0.5..=0.51).contains(&min), "{min}");
    }

    #[test]
    fn unschedulable_at_nominal() {
        let w = single(6, 5, 100, 100);
        let r = min_frequency_search(&w, &SearchOptions::new(Family::TrueScaling, 0.01f64)).unwrap();
        assert_eq!(r.min_phi, None);
        assert_eq!(r.probes.len(), 1);
    }

    #[test]
    fn slowdown_family_search() {
        let w = single(40, 80, 200, 200);
        let r = min_frequency_search(&w, &SearchOptions::new(Family::slowdown(16), 0.01f64)).unwrap();
        let min = r.min_phi.unwrap();
        assert!((0.45..=0.56).contains(&min), "{min}");
        assert!(r.probes[1..].iter().all(|p| p.params.is_some()));
    }

    #[test]
    fn search_rejects_bad_tolerance() {
        let w = single(4, 8, 100, 100);
        for tol in [0.0, 1.0, -0.5] {
            assert!(matches!(
                min_frequency_search(&w, &SearchOptions::new(Family::TrueScaling, tol)),
                Err(SearchError::Tolerance(_))
            ));
        }
    }

    #[test]
    fn floor_terminates_tiny_tolerance() {
        let w = single(1, 1000, 1000, 1000);
        let r = min_frequency_search(&w, &SearchOptions::new(Family::TrueScaling, 0.001f64)).unwrap();
        assert_eq!(r.min_phi, Some(PHI_FLOOR));
    }
}
