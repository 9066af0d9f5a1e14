//! Tick-by-tick reference simulator. No event queue, no ready set: every
//! tick rescans every task. Only used to cross-check [`super::simulate`].

use std::collections::VecDeque;

use super::{check_inputs, new_record, plan, settle, ExecutionMode, JobRecord, RoutineCycle, SimError, Slot, Step, Trace};
use crate::scalar::Scalar;
use crate::slowdown::active_params;
use crate::workload::{generate_arrivals, Tick, Workload};

pub const DEFAULT_BRUTE_FORCE_CAP: u64 = 50_000_000;

/// Cap on `horizon × tasks`, overridable through `FREQSIM_CAP`.
pub fn brute_force_cap() -> u64 {
    std::env::var("FREQSIM_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BRUTE_FORCE_CAP)
}

pub fn brute_force_simulate<T: Scalar>(workload: &Workload, mode: &ExecutionMode<T>) -> Result<Trace<T>, SimError> {
    brute_force_simulate_capped(workload, mode, brute_force_cap())
}

#[derive(Clone, Copy)]
enum State {
    Computing(Tick),
    Waiting(Tick),
}

struct Pending {
    record: usize,
    step: usize,
    state: State,
}

pub fn brute_force_simulate_capped<T: Scalar>(
    workload: &Workload,
    mode: &ExecutionMode<T>,
    cap: u64,
) -> Result<Trace<T>, SimError> {
    check_inputs(workload, mode)?;
    let horizon = workload.horizon;
    let need = horizon.saturating_mul(workload.tasks.len().max(1) as u64);
    if need > cap {
        return Err(SimError::CapExceeded { need, cap });
    }

    let n = workload.tasks.len();
    let steps: Vec<Vec<Step>> = workload.tasks.iter().map(|t| plan(t, mode)).collect();
    let releases: Vec<Vec<Tick>> = workload
        .tasks
        .iter()
        .map(|t| generate_arrivals(t, horizon, workload.seed))
        .collect();
    let mut next_release = vec![0usize; n];
    let mut queues: Vec<VecDeque<Pending>> = (0..n).map(|_| VecDeque::new()).collect();
    let mut records: Vec<JobRecord> = Vec::new();

    // Moves the head of queue `ti` to step `step` at time `now`.
    fn advance(
        queue: &mut VecDeque<Pending>,
        steps: &[Step],
        records: &mut [JobRecord],
        mut step: usize,
        now: Tick,
    ) {
        loop {
            let Some(head) = queue.front_mut() else { return };
            match steps.get(step) {
                None => {
                    records[head.record].completion = Some(now);
                    queue.pop_front();
                    step = 0;
                }
                Some(Step::Compute(c)) => {
                    head.step = step;
                    head.state = State::Computing(*c);
                    return;
                }
                Some(Step::Wait(w)) => {
                    head.step = step;
                    head.state = State::Waiting(now + w);
                    return;
                }
            }
        }
    }

    let routine = mode.slowdown_config();
    let mut cycles = Vec::new();
    let mut burst_end: Tick = 0;
    let mut next_cycle: Tick = 0;
    let mut attribution = Vec::with_capacity(horizon as usize);

    for t in 0..horizon {
        for ti in 0..n {
            if let Some(head) = queues[ti].front() {
                if let State::Waiting(until) = head.state {
                    if until == t {
                        let step = head.step + 1;
                        advance(&mut queues[ti], &steps[ti], &mut records, step, t);
                    }
                }
            }
        }
        for ti in 0..n {
            if releases[ti].get(next_release[ti]) == Some(&t) {
                let record = records.len();
                records.push(new_record(&workload.tasks[ti], next_release[ti] as u32, t));
                next_release[ti] += 1;
                queues[ti].push_back(Pending {
                    record,
                    step: 0,
                    state: State::Computing(0),
                });
                if queues[ti].len() == 1 {
                    advance(&mut queues[ti], &steps[ti], &mut records, 0, t);
                }
            }
        }

        let mut best: Option<usize> = None;
        for ti in 0..n {
            if let Some(Pending { state: State::Computing(_), .. }) = queues[ti].front() {
                if best.is_none_or(|b| workload.tasks[ti].priority < workload.tasks[b].priority) {
                    best = Some(ti);
                }
            }
        }

        if let Some(config) = routine {
            if t == next_cycle {
                let params = active_params(config, t, best.map(|ti| workload.tasks[ti].id));
                cycles.push(RoutineCycle { start: t, params });
                burst_end = t + params.execute;
                next_cycle = burst_end + params.sleep;
                for queue in &queues {
                    for job in queue {
                        records[job.record].slowdown_activations_during += 1;
                    }
                }
            }
        }

        for queue in &queues {
            if let Some(Pending { record, state: State::Waiting(_), .. }) = queue.front() {
                records[*record].wait_ticks += 1;
            }
        }

        if routine.is_some() && t < burst_end {
            attribution.push(Slot::Routine);
        } else if let Some(ti) = best {
            let head = queues[ti].front_mut().expect("best has a head");
            let State::Computing(left) = &mut head.state else { unreachable!() };
            *left -= 1;
            records[head.record].busy_ticks += 1;
            if *left == 0 {
                let step = head.step + 1;
                advance(&mut queues[ti], &steps[ti], &mut records, step, t + 1);
            }
            attribution.push(Slot::Task(workload.tasks[ti].id));
        } else {
            attribution.push(Slot::Idle);
        }
    }

    let warnings = settle(&mut records, horizon);
    Ok(Trace {
        horizon,
        mode: mode.clone(),
        fingerprint: workload.fingerprint(),
        attribution,
        jobs: records,
        cycles,
        warnings,
    })
}
