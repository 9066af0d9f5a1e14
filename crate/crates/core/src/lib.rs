//! Minimum schedulable processor frequency for fixed-priority real-time
//! workloads, comparing true frequency scaling against a highest-priority
//! slowdown routine and the naive utilization estimate.
//!
//! The math is generic over [`Scalar`] (`f32`/`f64`); the aliases below fix
//! it to `f64`.

pub mod analysis;
pub mod cli;
pub mod report;
pub mod scalar;
pub mod search;
pub mod simcore;
pub mod slowdown;
pub mod workload;

pub use scalar::Scalar;
pub use slowdown::{BurstParams, SlowdownConfig};
pub use workload::{parse_workload, Workload};

pub type ExecutionMode = simcore::ExecutionMode<f64>;
pub type Trace = simcore::Trace<f64>;
pub type SearchResult = search::SearchResult<f64>;
pub type SearchOptions = search::SearchOptions<f64>;
pub type DistortionReport = slowdown::DistortionReport<f64>;
pub type ComparisonReport = analysis::ComparisonReport<f64>;
pub type EnergyParams = analysis::EnergyParams<f64>;

pub type TraceF32 = simcore::Trace<f32>;
pub type SearchResultF32 = search::SearchResult<f32>;
