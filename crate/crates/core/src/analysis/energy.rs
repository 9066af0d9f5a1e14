//! Dynamic power `P = c·C·V²·F` and energy `E = P·t` over busy time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::simcore::Trace;
use crate::workload::Tick;

/// Supply voltage as a function of frequency fraction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VoltageModel<T> {
    /// `V(φ) = φ`.
    #[default]
    Proportional,
    /// `V(φ) = offset + slope·φ`.
    Affine { offset: T, slope: T },
    /// Piecewise-linear through `[φ, V]` points sorted by φ; clamped at
    /// both ends.
    Table { points: Vec<[T; 2]> },
}

impl<T: Scalar> VoltageModel<T> {
    pub fn voltage(&self, phi: T) -> T {
        match self {
            VoltageModel::Proportional => phi,
            VoltageModel::Affine { offset, slope } => *offset + *slope * phi,
            VoltageModel::Table { points } => {
                let Some(first) = points.first() else { return phi };
                if phi <= first[0] {
                    return first[1];
                }
                for w in points.windows(2) {
                    let ([x0, y0], [x1, y1]) = (w[0], w[1]);
                    if phi <= x1 {
                        if x1 == x0 {
                            return y1;
                        }
                        return y0 + (y1 - y0) * (phi - x0) / (x1 - x0);
                    }
                }
                points[points.len() - 1][1]
            }
        }
    }

    fn check(&self) -> Result<(), EnergyError> {
        match self {
            VoltageModel::Proportional => Ok(()),
            VoltageModel::Affine { slope, .. } => {
                if *slope < T::zero() {
                    Err(EnergyError::Decreasing)
                } else {
                    Ok(())
                }
            }
            VoltageModel::Table { points } => {
                if points.is_empty() {
                    return Err(EnergyError::Invalid("voltage table is empty".into()));
                }
                if points.windows(2).any(|w| w[1][0] < w[0][0]) {
                    return Err(EnergyError::Invalid("voltage table not sorted by frequency".into()));
                }
                if points.windows(2).any(|w| w[1][1] < w[0][1]) {
                    return Err(EnergyError::Decreasing);
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct EnergyParams<T> {
    #[serde(default = "one")]
    pub c: T,
    #[serde(default = "one")]
    pub cap: T,
    #[serde(default)]
    pub voltage: VoltageModel<T>,
}

fn one<T: Scalar>() -> T {
    T::one()
}

impl<T: Scalar> Default for EnergyParams<T> {
    fn default() -> Self {
        EnergyParams {
            c: T::one(),
            cap: T::one(),
            voltage: VoltageModel::Proportional,
        }
    }
}

impl<T: Scalar> EnergyParams<T> {
    pub fn check(&self) -> Result<(), EnergyError> {
        if !(self.c > T::zero() && self.cap > T::zero()) || !(self.c.is_finite() && self.cap.is_finite()) {
            return Err(EnergyError::Invalid("c and cap must be positive and finite".into()));
        }
        self.voltage.check()
    }

    pub fn power(&self, phi: T) -> T {
        let v = self.voltage.voltage(phi);
        self.c * self.cap * v * v * phi
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnergyError {
    #[error("invalid energy parameters: {0}")]
    Invalid(String),
    #[error("voltage must be non-decreasing in frequency")]
    Decreasing,
    #[error("voltage at the requested frequency is not positive")]
    NonPositiveVoltage,
}

pub const ENERGY_NOTE: &str = "energy counts task busy ticks only; idle and routine ticks are excluded. \
The nominal ratio assumes execution stretches in proportion to the frequency reduction.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub phi: T,
    pub power: T,
    pub energy: T,
    pub busy_ticks: Tick,
    /// `(V(1) / V(φ))²`: nominal energy over energy at φ for the same work.
    pub energy_ratio_vs_nominal: T,
    pub note: String,
}

pub fn energy_metrics<T: Scalar>(trace: &Trace<T>, phi: T, params: &EnergyParams<T>) -> Result<EnergyReport<T>, EnergyError> {
    params.check()?;
    let v = params.voltage.voltage(phi);
    if v <= T::zero() {
        return Err(EnergyError::NonPositiveVoltage);
    }
    let power = params.power(phi);
    let busy = trace.task_ticks();
    let ratio = params.voltage.voltage(T::one()) / v;
    Ok(EnergyReport {
        phi,
        power,
        energy: power * T::from_ticks(busy),
        busy_ticks: busy,
        energy_ratio_vs_nominal: ratio * ratio,
        note: ENERGY_NOTE.to_string(),
    })
}
