use super::*;
use crate::slowdown::{IntervalParams, Schedule};
use crate::workload::ArrivalModel;

fn one_shot(compute: Tick, deadline: Tick, release: Tick, horizon: Tick) -> Workload {
    Workload {
        tasks: vec![TaskSpec {
            id: 1,
            priority: 1,
            deadline,
            arrivals: ArrivalModel::Trace {
                releases: vec![release],
            },
            body: vec![Segment::Compute(compute)],
        }],
        horizon,
        seed: 0,
    }
}

fn periodic(id: TaskId, priority: i32, compute: Tick, period: Tick) -> TaskSpec {
    TaskSpec {
        id,
        priority,
        deadline: period,
        arrivals: ArrivalModel::periodic(period),
        body: vec![Segment::Compute(compute)],
    }
}

fn both<T: Scalar>(w: &Workload, m: &ExecutionMode<T>) -> Trace<T> {
    let fast = simulate(w, m).unwrap();
    let slow = brute_force_simulate(w, m).unwrap();
    assert_eq!(fast, slow, "engine and oracle disagree");
    fast
}

#[test]
fn true_scaling_half_doubles_service() {
    let w = one_shot(4, 10, 0, 20);
    let tr = both(&w, &ExecutionMode::true_scaling(0.5f64));
    let job = &tr.jobs[0];
    assert_eq!(job.completion, Some(8));
    assert!(!job.missed);
    assert_eq!(job.busy_ticks, 8);
}

#[test]
fn fine_slowdown_matches_true_scaling() {
    let w = one_shot(6, 9, 0, 12);
    let tr = both(&w, &ExecutionMode::<f64>::slowdown(BurstParams::new(1, 3)));
    let routine: Vec<usize> = tr
        .attribution
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Slot::Routine)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(routine, vec![0, 4, 8]);
    for t in [1, 2, 3, 5, 6, 7] {
        assert_eq!(tr.attribution[t], Slot::Task(1), "tick {t}");
    }
    assert_eq!(tr.jobs[0].completion, Some(8));
    assert!(!tr.jobs[0].missed);

    let truth = both(&w, &ExecutionMode::true_scaling(0.75f64));
    assert_eq!(truth.jobs[0].completion, Some(8));
}

#[test]
fn coarse_slowdown_misses_where_true_scaling_meets() {
    let w = one_shot(1, 2, 0, 16);
    let coarse = both(&w, &ExecutionMode::<f64>::slowdown(BurstParams::new(2, 6)));
    assert_eq!(coarse.jobs[0].completion, Some(3));
    assert!(coarse.jobs[0].missed);

    let truth = both(&w, &ExecutionMode::true_scaling(0.75f64));
    assert_eq!(truth.jobs[0].completion, Some(2));
    assert!(!truth.jobs[0].missed);
}

#[test]
fn empty_workload_is_idle() {
    let w = Workload {
        tasks: vec![],
        horizon: 10,
        seed: 0,
    };
    let tr = both(&w, &ExecutionMode::<f64>::Baseline);
    assert!(tr.attribution.iter().all(|s| *s == Slot::Idle));
    assert_eq!(measure_utilization(&tr), 0.0);
}

#[test]
fn routine_alternates_without_tasks() {
    let w = Workload {
        tasks: vec![],
        horizon: 6,
        seed: 0,
    };
    let tr = both(&w, &ExecutionMode::<f64>::slowdown(BurstParams::new(1, 1)));
    use Slot::*;
    assert_eq!(tr.attribution, vec![Routine, Idle, Routine, Idle, Routine, Idle]);
}

#[test]
fn utilization_examples() {
    let w = Workload {
        tasks: vec![periodic(1, 1, 5, 10)],
        horizon: 100,
        seed: 0,
    };
    let tr = both(&w, &ExecutionMode::<f64>::Baseline);
    assert_eq!(tr.miss_count(), 0);
    assert_eq!(measure_utilization(&tr), 0.5);

    // Busy ticks over [0, 80): 4 jobs x 5 + 5 jobs x 4 = 40.
    let w = Workload {
        tasks: vec![periodic(1, 2, 5, 20), periodic(2, 1, 4, 16)],
        horizon: 80,
        seed: 0,
    };
    let tr = both(&w, &ExecutionMode::<f64>::Baseline);
    assert_eq!(tr.task_ticks(), 40);
    assert_eq!(measure_utilization(&tr), 0.5);
    assert_eq!(measure_utilization::<f32>(&simulate(&w, &ExecutionMode::Baseline).unwrap()), 0.5);
}

#[test]
fn preemption_splits_low_priority_job() {
    // Low-priority job released at 0 needs 4; high-priority job at 2 needs 2.
    let w = Workload {
        tasks: vec![
            TaskSpec {
                id: 1,
                priority: 2,
                deadline: 10,
                arrivals: ArrivalModel::Trace { releases: vec![0] },
                body: vec![Segment::Compute(4)],
            },
            TaskSpec {
                id: 2,
                priority: 1,
                deadline: 10,
                arrivals: ArrivalModel::Trace { releases: vec![2] },
                body: vec![Segment::Compute(2)],
            },
        ],
        horizon: 10,
        seed: 0,
    };
    let tr = both(&w, &ExecutionMode::<f64>::Baseline);
    use Slot::*;
    assert_eq!(
        &tr.attribution[..7],
        &[Task(1), Task(1), Task(2), Task(2), Task(1), Task(1), Idle]
    );
    assert_eq!(tr.jobs[0].completion, Some(6));
    assert_eq!(tr.jobs[1].completion, Some(4));
}

#[test]
fn hard_wait_is_not_compressed_and_not_ready() {
    let w = Workload {
        tasks: vec![TaskSpec {
            id: 1,
            priority: 1,
            deadline: 30,
            arrivals: ArrivalModel::Trace { releases: vec![0] },
            body: vec![Segment::Compute(2), Segment::HardWait(5), Segment::Compute(2)],
        }],
        horizon: 30,
        seed: 0,
    };
    let base = both(&w, &ExecutionMode::<f64>::Baseline);
    assert_eq!(base.jobs[0].completion, Some(9));
    assert_eq!(base.jobs[0].wait_ticks, 5);
    assert!(base.attribution[2..7].iter().all(|s| *s == Slot::Idle));

    let half = both(&w, &ExecutionMode::true_scaling(0.5f64));
    // 4 + 5 + 4
    assert_eq!(half.jobs[0].completion, Some(13));
    assert_eq!(half.jobs[0].wait_ticks, 5);
    assert_eq!(half.jobs[0].busy_ticks, 8);
}

#[test]
fn trailing_wait_completes_job_at_wait_end() {
    let w = Workload {
        tasks: vec![TaskSpec {
            id: 1,
            priority: 1,
            deadline: 30,
            arrivals: ArrivalModel::Trace { releases: vec![1] },
            body: vec![Segment::HardWait(3), Segment::Compute(1), Segment::HardWait(4)],
        }],
        horizon: 30,
        seed: 0,
    };
    let tr = both(&w, &ExecutionMode::<f64>::Baseline);
    assert_eq!(tr.jobs[0].completion, Some(9));
    assert_eq!(tr.jobs[0].wait_ticks, 7);
    assert_eq!(tr.attribution[4], Slot::Task(1));
}

#[test]
fn jobs_of_one_task_run_fifo_and_late_jobs_finish() {
    // Period 4, compute 6: every job overruns; successors queue behind.
    let w = Workload {
        tasks: vec![periodic(1, 1, 6, 4)],
        horizon: 12,
        seed: 0,
    };
    let tr = both(&w, &ExecutionMode::<f64>::Baseline);
    assert_eq!(tr.jobs[0].completion, Some(6));
    assert!(tr.jobs[0].missed);
    assert_eq!(tr.jobs[1].completion, Some(12));
    assert!(tr.jobs[1].missed);
    // Job 2 released at 8, deadline 12 <= horizon, never started: missed.
    assert_eq!(tr.jobs[2].completion, None);
    assert!(tr.jobs[2].missed);
    assert!(!tr.jobs[2].undecided);
}

#[test]
fn pending_job_with_future_deadline_is_undecided() {
    let w = one_shot(10, 50, 5, 10);
    let tr = both(&w, &ExecutionMode::<f64>::Baseline);
    assert!(tr.jobs[0].undecided);
    assert!(!tr.jobs[0].missed);
    assert_eq!(tr.warnings.len(), 1);
}

#[test]
fn baseline_equals_true_scaling_at_one() {
    let w = Workload {
        tasks: vec![periodic(1, 2, 5, 20), periodic(2, 1, 4, 16)],
        horizon: 160,
        seed: 3,
    };
    let a = simulate(&w, &ExecutionMode::<f64>::Baseline).unwrap();
    let b = simulate(&w, &ExecutionMode::true_scaling(1.0f64)).unwrap();
    assert_eq!(a.attribution, b.attribution);
    assert_eq!(a.jobs, b.jobs);
}

#[test]
fn per_task_schedule_tracks_ready_task() {
    let w = Workload {
        tasks: vec![
            TaskSpec {
                id: 1,
                priority: 1,
                deadline: 100,
                arrivals: ArrivalModel::Trace { releases: vec![0] },
                body: vec![Segment::Compute(4)],
            },
            TaskSpec {
                id: 2,
                priority: 2,
                deadline: 100,
                arrivals: ArrivalModel::Trace { releases: vec![0] },
                body: vec![Segment::Compute(6)],
            },
        ],
        horizon: 40,
        seed: 0,
    };
    let config = SlowdownConfig {
        default: BurstParams::new(1, 9),
        schedule: Schedule::PerTask {
            tasks: [(1, BurstParams::new(1, 1)), (2, BurstParams::new(1, 3))].into(),
        },
    };
    let tr = both(&w, &ExecutionMode::<f64>::Slowdown { config });
    // Task 1 at 50%: R 1 R 1 R 1 R 1 -> done at 8, then task 2 cycles at 25%.
    assert_eq!(tr.cycles[0].params, BurstParams::new(1, 1));
    assert_eq!(tr.jobs[0].completion, Some(8));
    assert_eq!(tr.cycles[4].start, 8);
    assert_eq!(tr.cycles[4].params, BurstParams::new(1, 3));
    // Once everything is done the default applies.
    assert_eq!(tr.cycles.last().unwrap().params, BurstParams::new(1, 9));
}

#[test]
fn per_interval_schedule_switches_at_cycle_boundaries() {
    let w = Workload {
        tasks: vec![],
        horizon: 20,
        seed: 0,
    };
    let config = SlowdownConfig {
        default: BurstParams::new(1, 1),
        schedule: Schedule::PerInterval {
            intervals: vec![IntervalParams {
                start: 0,
                end: 10,
                params: BurstParams::new(1, 3),
            }],
        },
    };
    let tr = both(&w, &ExecutionMode::<f64>::Slowdown { config });
    let starts: Vec<_> = tr.cycles.iter().map(|c| c.start).collect();
    // Cycle at 8 starts inside [0,10) and keeps 1/3 until 12.
    assert_eq!(starts, vec![0, 4, 8, 12, 14, 16, 18]);
}

#[test]
fn activation_count_covers_release_to_completion() {
    let w = one_shot(6, 9, 0, 12);
    let tr = both(&w, &ExecutionMode::<f64>::slowdown(BurstParams::new(1, 3)));
    // Cycles at 0 and 4 start while the job is pending; 8 is its completion.
    assert_eq!(tr.jobs[0].slowdown_activations_during, 2);
}

#[test]
fn rejects_bad_modes() {
    let w = one_shot(1, 2, 0, 4);
    assert!(matches!(
        simulate(&w, &ExecutionMode::true_scaling(0.0f64)),
        Err(SimError::InvalidPhi(_))
    ));
    assert!(matches!(
        simulate(&w, &ExecutionMode::true_scaling(1.5f64)),
        Err(SimError::InvalidPhi(_))
    ));
    assert!(matches!(
        simulate(&w, &ExecutionMode::<f64>::slowdown(BurstParams::new(0, 1))),
        Err(SimError::Slowdown(_))
    ));
    let unknown = SlowdownConfig {
        default: BurstParams::new(1, 1),
        schedule: Schedule::PerTask {
            tasks: [(9, BurstParams::new(1, 1))].into(),
        },
    };
    assert!(simulate(&w, &ExecutionMode::<f64>::Slowdown { config: unknown }).is_err());
}

#[test]
fn brute_force_cap_guard() {
    let w = one_shot(1, 2, 0, 1000);
    let err = brute_force_simulate_capped(&w, &ExecutionMode::<f64>::Baseline, 999).unwrap_err();
    assert!(matches!(err, SimError::CapExceeded { need: 1000, cap: 999 }));
    assert!(brute_force_simulate_capped(&w, &ExecutionMode::<f64>::Baseline, 1000).is_ok());
}
