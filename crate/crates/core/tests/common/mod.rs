#![allow(dead_code)]

use freqsim::simcore::ExecutionMode;
use freqsim::slowdown::{IntervalParams, Schedule};
use freqsim::workload::{ArrivalModel, Segment, TaskSpec, Tick, Workload};
use freqsim::{BurstParams, SlowdownConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn task(id: u32, deadline: Tick, arrivals: ArrivalModel, body: Vec<Segment>) -> TaskSpec {
    TaskSpec {
        id,
        priority: id as i32,
        deadline,
        arrivals,
        body,
    }
}

pub fn single(compute: Tick, deadline: Tick, arrivals: ArrivalModel, horizon: Tick) -> Workload {
    Workload {
        tasks: vec![task(1, deadline, arrivals, vec![Segment::Compute(compute)])],
        horizon,
        seed: 0,
    }
}

/// Up to five tasks with mixed arrival models; waits only when asked.
pub fn random_workload(seed: u64, horizon: Tick, with_waits: bool) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=5u32);
    let tasks = (1..=n)
        .map(|id| {
            let period = rng.gen_range(8..200u64);
            let compute = rng.gen_range(1..=(period / 4).max(1));
            let mut body = vec![Segment::Compute(compute)];
            if with_waits && rng.gen_bool(0.7) {
                body.push(Segment::HardWait(rng.gen_range(1..20)));
                body.push(Segment::Compute(rng.gen_range(1..=4)));
            }
            let arrivals = match rng.gen_range(0..3) {
                0 => ArrivalModel::Periodic {
                    period,
                    phase: rng.gen_range(0..period),
                    jitter: rng.gen_range(0..period / 2),
                },
                1 => {
                    let min_gap = period / 2;
                    ArrivalModel::Poisson {
                        mean_gap: period * 3 / 2,
                        min_gap,
                    }
                }
                _ => {
                    let mut t = rng.gen_range(0..50);
                    let mut releases = Vec::new();
                    while t < horizon {
                        releases.push(t);
                        t += rng.gen_range(period / 2..2 * period);
                    }
                    ArrivalModel::Trace { releases }
                }
            };
            let deadline = rng.gen_range(compute..=2 * period);
            task(id, deadline, arrivals, body)
        })
        .collect();
    Workload {
        tasks,
        horizon,
        seed: rng.gen(),
    }
}

/// Constant, per-task or per-interval slowdown with small bursts.
pub fn random_slowdown(rng: &mut ChaCha8Rng, workload: &Workload) -> SlowdownConfig {
    let kind = rng.gen_range(0..3);
    let mut burst = || BurstParams::new(rng.gen_range(1..=4), rng.gen_range(1..=6));
    let default = burst();
    let schedule = match kind {
        0 => Schedule::Constant,
        1 => Schedule::PerTask {
            tasks: workload.tasks.iter().map(|t| (t.id, burst())).collect(),
        },
        _ => {
            let len = workload.horizon / 4;
            Schedule::PerInterval {
                intervals: (0..4)
                    .map(|k| IntervalParams {
                        start: k * len,
                        end: (k + 1) * len,
                        params: burst(),
                    })
                    .collect(),
            }
        }
    };
    SlowdownConfig { default, schedule }
}

pub fn random_mode(seed: u64, workload: &Workload, slowdown: bool) -> ExecutionMode<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    if slowdown {
        ExecutionMode::Slowdown {
            config: random_slowdown(&mut rng, workload),
        }
    } else {
        ExecutionMode::TrueScaling {
            phi: rng.gen_range(0.2..=1.0),
        }
    }
}
