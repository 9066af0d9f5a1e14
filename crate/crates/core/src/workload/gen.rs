//! Synthetic periodic task sets for tests and the `gen` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ArrivalModel, Segment, TaskSpec, Tick, Workload};

/// Periods with a small hyperperiod (200).
pub const DEFAULT_PERIODS: &[Tick] = &[10, 20, 25, 40, 50, 100];

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub tasks: usize,
    pub utilization: f64,
    pub seed: u64,
    pub periods: Vec<Tick>,
    /// Insert hard waits between compute chunks.
    pub with_waits: bool,
    pub hyperperiods: u64,
}

impl GenConfig {
    pub fn new(tasks: usize, utilization: f64, seed: u64) -> Self {
        GenConfig {
            tasks,
            utilization,
            seed,
            periods: DEFAULT_PERIODS.to_vec(),
            with_waits: false,
            hyperperiods: 2,
        }
    }
}

/// Splits `total` across `n` shares by iterative uniform splitting (UUniFast).
pub fn uunifast<R: Rng>(n: usize, total: f64, rng: &mut R) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut shares = vec![0.0; n];
    let mut remaining = total;
    for i in (1..n).rev() {
        let next = remaining * rng.gen::<f64>().powf(1.0 / i as f64);
        shares[i] = remaining - next;
        remaining = next;
    }
    shares[0] = remaining;
    shares
}

fn gcd(a: Tick, b: Tick) -> Tick {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn hyperperiod(periods: impl IntoIterator<Item = Tick>) -> Tick {
    periods
        .into_iter()
        .fold(1, |acc, p| if p == 0 { acc } else { acc / gcd(acc, p) * p })
}

/// Rate-monotonic ordered periodic task set with implicit deadlines.
pub fn generate_workload(cfg: &GenConfig) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shares = uunifast(cfg.tasks, cfg.utilization, &mut rng);

    let mut drafts: Vec<(Tick, Vec<Segment>)> = shares
        .iter()
        .map(|share| {
            let period = cfg.periods[rng.gen_range(0..cfg.periods.len())];
            let compute = ((share * period as f64).round() as Tick).clamp(1, period);
            let body = if cfg.with_waits && compute >= 2 {
                let first = rng.gen_range(1..compute);
                let wait = rng.gen_range(1..=(period / 4).max(1));
                vec![
                    Segment::Compute(first),
                    Segment::HardWait(wait),
                    Segment::Compute(compute - first),
                ]
            } else {
                vec![Segment::Compute(compute)]
            };
            (period, body)
        })
        .collect();
    drafts.sort_by_key(|(period, _)| *period);

    let tasks: Vec<TaskSpec> = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (period, body))| TaskSpec {
            id: i as u32 + 1,
            priority: i as i32 + 1,
            deadline: period,
            arrivals: ArrivalModel::periodic(period),
            body,
        })
        .collect();
    let hyper = hyperperiod(tasks.iter().filter_map(|t| match t.arrivals {
        ArrivalModel::Periodic { period, .. } => Some(period),
        _ => None,
    }));

    Workload {
        tasks,
        horizon: hyper * cfg.hyperperiods.max(1),
        seed: cfg.seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::validate;

    #[test]
    fn uunifast_sums_to_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..8 {
            let s = uunifast(n, 0.7, &mut rng);
            assert_eq!(s.len(), n);
            assert!((s.iter().sum::<f64>() - 0.7).abs() < 1e-12);
            assert!(s.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn hyperperiod_of_defaults() {
        assert_eq!(hyperperiod(DEFAULT_PERIODS.iter().copied()), 200);
        assert_eq!(hyperperiod([4, 6]), 12);
    }

    #[test]
    fn generated_sets_are_valid_and_rate_monotonic() {
        for seed in 0..20 {
            let mut cfg = GenConfig::new(4, 0.6, seed);
            cfg.with_waits = seed % 2 == 0;
            let w = generate_workload(&cfg);
            assert!(validate(&w).is_ok(), "seed {seed}");
            let periods: Vec<_> = w
                .tasks
                .iter()
                .map(|t| match t.arrivals {
                    ArrivalModel::Periodic { period, .. } => period,
                    _ => unreachable!(),
                })
                .collect();
            assert!(periods.windows(2).all(|p| p[0] <= p[1]));
            assert_eq!(generate_workload(&cfg), w);
        }
    }
}
