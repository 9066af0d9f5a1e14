use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ArrivalModel, TaskSpec, Tick};

/// Identifier of the arrival PRNG, recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64/stream=task_id";

fn task_rng(seed: u64, task: &TaskSpec) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(task.id));
    rng
}

/// Release ticks of `task` in `[0, horizon)`, strictly increasing.
///
/// A pure function of `(task, horizon, seed)`. Each task draws from its own
/// ChaCha stream, so adding a task never perturbs the others.
pub fn generate_arrivals(task: &TaskSpec, horizon: Tick, seed: u64) -> Vec<Tick> {
    match &task.arrivals {
        ArrivalModel::Periodic {
            period,
            phase,
            jitter,
        } => {
            let mut rng = task_rng(seed, task);
            let mut out = Vec::new();
            let mut base = *phase;
            while base < horizon {
                let offset = if *jitter > 0 {
                    rng.gen_range(0..=*jitter)
                } else {
                    0
                };
                let release = base + offset;
                if release >= horizon {
                    break;
                }
                out.push(release);
                base += period;
            }
            out
        }
        ArrivalModel::Poisson { mean_gap, min_gap } => {
            let mut rng = task_rng(seed, task);
            let spread = mean_gap.saturating_sub(*min_gap) as f64;
            let mut out = Vec::new();
            let mut t: Tick = 0;
            loop {
                // u in (0, 1]
                let u = 1.0 - rng.gen::<f64>();
                let extra = (-spread * u.ln()).floor() as Tick;
                t = match t.checked_add(min_gap + extra) {
                    Some(next) => next,
                    None => break,
                };
                if t >= horizon {
                    break;
                }
                out.push(t);
            }
            out
        }
        ArrivalModel::Trace { releases } => {
            releases.iter().copied().take_while(|&r| r < horizon).collect()
        }
    }
}
