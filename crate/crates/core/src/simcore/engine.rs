use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use super::{check_inputs, new_record, plan, settle, ExecutionMode, JobRecord, RoutineCycle, SimError, Slot, Step, Trace};
use crate::scalar::Scalar;
use crate::slowdown::active_params;
use crate::workload::{generate_arrivals, Tick, Workload};

// Same-tick ordering: wait ends before releases.
const WAIT_END: u8 = 0;
const RELEASE: u8 = 1;

#[derive(Debug, Clone, Copy)]
enum Phase {
    Compute { remaining: Tick },
    Wait { since: Tick, until: Tick },
}

#[derive(Debug)]
struct Job {
    record: usize,
    step: usize,
    phase: Phase,
}

struct TaskRun {
    priority: i32,
    steps: Vec<Step>,
    releases: Vec<Tick>,
    next_release: usize,
    queue: VecDeque<Job>,
}

struct Engine<'w> {
    workload: &'w Workload,
    tasks: Vec<TaskRun>,
    records: Vec<JobRecord>,
    events: BinaryHeap<Reverse<(Tick, u8, usize)>>,
    ready: BTreeSet<(i32, usize)>,
}

impl Engine<'_> {
    /// Puts the head job of `ti` into step `step` at time `t`, completing it
    /// (and promoting the next queued job) when the body is exhausted.
    fn enter(&mut self, ti: usize, step: usize, t: Tick) {
        let key = (self.tasks[ti].priority, ti);
        self.ready.remove(&key);
        let task = &mut self.tasks[ti];
        let job = task.queue.front_mut().expect("head job");
        job.step = step;
        match task.steps.get(step) {
            None => {
                let record = job.record;
                task.queue.pop_front();
                self.records[record].completion = Some(t);
                if !task.queue.is_empty() {
                    self.enter(ti, 0, t);
                }
            }
            Some(Step::Compute(n)) => {
                job.phase = Phase::Compute { remaining: *n };
                self.ready.insert(key);
            }
            Some(Step::Wait(n)) => {
                job.phase = Phase::Wait { since: t, until: t + n };
                self.events.push(Reverse((t + n, WAIT_END, ti)));
            }
        }
    }

    fn release(&mut self, ti: usize, t: Tick) {
        let task = &mut self.tasks[ti];
        let job_index = task.next_release as u32;
        task.next_release += 1;
        if let Some(&next) = task.releases.get(task.next_release) {
            self.events.push(Reverse((next, RELEASE, ti)));
        }
        let record = self.records.len();
        self.records
            .push(new_record(&self.workload.tasks[ti], job_index, t));
        let task = &mut self.tasks[ti];
        task.queue.push_back(Job {
            record,
            step: 0,
            phase: Phase::Compute { remaining: 0 },
        });
        if task.queue.len() == 1 {
            self.enter(ti, 0, t);
        }
    }

    fn wait_end(&mut self, ti: usize, t: Tick) {
        let job = self.tasks[ti].queue.front().expect("waiting head job");
        let Phase::Wait { since, until } = job.phase else {
            unreachable!("wait end for a job that is not waiting");
        };
        debug_assert_eq!(until, t);
        let (record, step) = (job.record, job.step);
        self.records[record].wait_ticks += until - since;
        self.enter(ti, step + 1, t);
    }
}

/// Event-driven simulation of `workload` under `mode` over `[0, horizon)`.
pub fn simulate<T: Scalar>(workload: &Workload, mode: &ExecutionMode<T>) -> Result<Trace<T>, SimError> {
    check_inputs(workload, mode)?;
    let horizon = workload.horizon;

    let tasks: Vec<TaskRun> = workload
        .tasks
        .iter()
        .map(|spec| TaskRun {
            priority: spec.priority,
            steps: plan(spec, mode),
            releases: generate_arrivals(spec, horizon, workload.seed),
            next_release: 0,
            queue: VecDeque::new(),
        })
        .collect();
    let mut engine = Engine {
        workload,
        events: tasks
            .iter()
            .enumerate()
            .filter_map(|(ti, t)| t.releases.first().map(|&r| Reverse((r, RELEASE, ti))))
            .collect(),
        tasks,
        records: Vec::new(),
        ready: BTreeSet::new(),
    };

    let routine = mode.slowdown_config();
    let mut cycles = Vec::new();
    let mut burst_end: Tick = 0;
    let mut next_cycle: Tick = 0;
    let mut attribution = Vec::with_capacity(horizon as usize);

    let mut t: Tick = 0;
    while t < horizon {
        while let Some(&Reverse((at, kind, ti))) = engine.events.peek() {
            if at > t {
                break;
            }
            engine.events.pop();
            match kind {
                WAIT_END => engine.wait_end(ti, t),
                _ => engine.release(ti, t),
            }
        }

        if let Some(config) = routine {
            if t == next_cycle {
                let candidate = engine
                    .ready
                    .first()
                    .map(|&(_, ti)| workload.tasks[ti].id);
                let params = active_params(config, t, candidate);
                cycles.push(RoutineCycle { start: t, params });
                burst_end = t + params.execute;
                next_cycle = burst_end + params.sleep;
            }
        }

        let mut until = engine
            .events
            .peek()
            .map_or(horizon, |e| e.0 .0)
            .min(horizon);
        if routine.is_some() {
            until = until.min(next_cycle);
        }

        let slot = if routine.is_some() && t < burst_end {
            until = until.min(burst_end);
            Slot::Routine
        } else if let Some(&(_, ti)) = engine.ready.first() {
            let job = engine.tasks[ti].queue.front_mut().expect("ready head");
            let Phase::Compute { remaining } = &mut job.phase else {
                unreachable!("ready job must be computing");
            };
            until = until.min(t + *remaining);
            let ran = until - t;
            *remaining -= ran;
            let (done, record, step) = (*remaining == 0, job.record, job.step);
            engine.records[record].busy_ticks += ran;
            if done {
                engine.enter(ti, step + 1, until);
            }
            Slot::Task(workload.tasks[ti].id)
        } else {
            Slot::Idle
        };
        attribution.resize(until as usize, slot);
        t = until;
    }

    // Close out waits still running at the horizon.
    for task in &engine.tasks {
        if let Some(Job {
            record,
            phase: Phase::Wait { since, .. },
            ..
        }) = task.queue.front()
        {
            engine.records[*record].wait_ticks += horizon - since;
        }
    }

    let mut jobs = engine.records;
    let starts: Vec<Tick> = cycles.iter().map(|c: &RoutineCycle| c.start).collect();
    for job in &mut jobs {
        let end = job.completion.unwrap_or(horizon);
        let lo = starts.partition_point(|&s| s < job.release);
        let hi = starts.partition_point(|&s| s < end);
        job.slowdown_activations_during = hi.saturating_sub(lo) as u64;
    }
    let warnings = settle(&mut jobs, horizon);

    Ok(Trace {
        horizon,
        mode: mode.clone(),
        fingerprint: workload.fingerprint(),
        attribution,
        jobs,
        cycles,
        warnings,
    })
}
