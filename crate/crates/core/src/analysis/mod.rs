//! Cross-mode comparison: true scaling vs. slowdown approximation vs. the
//! naive estimate, plus the analytic and energy side reports.

pub mod energy;
pub mod rm;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::search::{min_frequency_search, naive_estimate, probe, Family, SearchError, SearchOptions, StartPoint};
use crate::simcore::{simulate, SimError};
use crate::slowdown::{distortion_metrics, BurstParams, DistortionReport, MIN_INTERVAL_CYCLES};
use crate::workload::{Tick, Workload};

pub use energy::{energy_metrics, EnergyError, EnergyParams, EnergyReport, VoltageModel};
pub use rm::{liu_layland_bound, rm_utilization_check, RmCheck, RmVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions<T> {
    pub max_cycle: Tick,
    /// Multiplies every burst; 1 keeps the finest granularity.
    pub burst_scale: Tick,
    pub tolerance: T,
}

impl<T: Scalar> CompareOptions<T> {
    pub fn new(max_cycle: Tick, tolerance: T) -> Self {
        CompareOptions {
            max_cycle,
            burst_scale: 1,
            tolerance,
        }
    }

    fn slowdown_family(&self) -> Family {
        Family::Slowdown {
            max_cycle: self.max_cycle,
            burst_scale: self.burst_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint<T> {
    pub phi: T,
    pub true_schedulable: bool,
    pub true_misses: usize,
    pub slowdown_schedulable: bool,
    pub slowdown_misses: usize,
    pub params: Option<BurstParams>,
    pub distortion: Option<DistortionReport<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence<T> {
    pub phi: T,
    pub true_schedulable: bool,
    pub slowdown_schedulable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport<T> {
    pub grid: Vec<T>,
    pub verdicts: Vec<GridPoint<T>>,
    pub min_phi_true: Option<T>,
    pub min_phi_slowdown: Option<T>,
    pub min_phi_naive: T,
    pub divergences: Vec<Divergence<T>>,
    pub assumes_monotonicity: bool,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("grid value {0} outside (0, 1]")]
    Grid(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn grid_point<T: Scalar>(workload: &Workload, phi: T, options: &CompareOptions<T>) -> Result<GridPoint<T>, AnalysisError> {
    let truth = probe(workload, Family::TrueScaling, phi, 1)?;
    let family = options.slowdown_family();
    let mode = family.mode_for(phi).map_err(SearchError::from)?;
    let trace = simulate(workload, &mode)?;
    let misses = trace.miss_count();
    let params = mode.slowdown_config().map(|c| c.default);
    let distortion = match params {
        Some(p) => Some(
            distortion_metrics(&trace, MIN_INTERVAL_CYCLES * p.cycle()).map_err(SimError::Slowdown)?,
        ),
        None => None,
    };
    Ok(GridPoint {
        phi,
        true_schedulable: truth.schedulable,
        true_misses: truth.misses,
        slowdown_schedulable: misses == 0,
        slowdown_misses: misses,
        params,
        distortion,
    })
}

/// Runs both families at every grid point plus both searches and the naive
/// estimate, and lists the grid points where the two verdicts differ.
///
/// Grid points are evaluated in parallel; the report is ordered by φ.
pub fn compare_modes<T: Scalar>(
    workload: &Workload,
    grid: &[T],
    options: &CompareOptions<T>,
) -> Result<ComparisonReport<T>, AnalysisError> {
    if let Some(bad) = grid.iter().find(|p| !(**p > T::zero() && **p <= T::one())) {
        return Err(AnalysisError::Grid(bad.to_string()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();

    let verdicts = grid
        .par_iter()
        .map(|&phi| grid_point(workload, phi, options))
        .collect::<Result<Vec<_>, _>>()?;

    let divergences = verdicts
        .iter()
        .filter(|g| g.true_schedulable != g.slowdown_schedulable)
        .map(|g| Divergence {
            phi: g.phi,
            true_schedulable: g.true_schedulable,
            slowdown_schedulable: g.slowdown_schedulable,
        })
        .collect();

    let search = |family| {
        min_frequency_search(
            workload,
            &SearchOptions::new(family, options.tolerance).start(StartPoint::Auto),
        )
    };
    let true_search = search(Family::TrueScaling)?;
    let slowdown_search = search(options.slowdown_family())?;

    Ok(ComparisonReport {
        grid,
        verdicts,
        min_phi_true: true_search.min_phi,
        min_phi_slowdown: slowdown_search.min_phi,
        min_phi_naive: naive_estimate(workload)?,
        divergences,
        assumes_monotonicity: workload.has_waits(),
    })
}

/// `lo, lo + step, …` up to `hi` inclusive (within half a step).
pub fn grid_range<T: Scalar>(lo: T, hi: T, step: T) -> Vec<T> {
    if !(step > T::zero()) || hi < lo {
        return Vec::new();
    }
    let n = ((hi - lo) / step + T::lit(0.5)).floor().to_usize().unwrap_or(0);
    (0..=n)
        .map(|k| {
            let v = lo + step * T::from_usize(k).expect("index");
            // Round to 1e-9 so that 0.1 + 7·0.05 prints as 0.45.
            (v * T::lit(1e9)).round() / T::lit(1e9)
        })
        .collect()
}
