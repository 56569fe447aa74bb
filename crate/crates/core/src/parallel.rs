//! Deterministic parallel ensemble reduction.
//!
//! Trajectories are grouped into fixed blocks; each block is summed in
//! trajectory order, blocks within a wave are combined pairwise in index order,
//! and waves are folded sequentially. The grouping depends only on the
//! trajectory count, so results are bit-identical for any worker count.

use rayon::prelude::*;

use crate::grid::GridAccumulator;

pub const BLOCK_SIZE: usize = 64;
pub const BLOCKS_PER_WAVE: usize = 16;

/// Per-run counters merged alongside the observable sums.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub clamp_events: u64,
    pub site_steps: u64,
    pub jumps: u64,
}

impl RunCounters {
    pub fn merge(&mut self, other: &RunCounters) {
        self.clamp_events += other.clamp_events;
        self.site_steps += other.site_steps;
        self.jumps += other.jumps;
    }
}

fn pairwise(mut parts: Vec<(GridAccumulator, RunCounters)>) -> (GridAccumulator, RunCounters) {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some((mut a, mut ca)) = it.next() {
            if let Some((b, cb)) = it.next() {
                a.merge(&b);
                ca.merge(&cb);
            }
            next.push((a, ca));
        }
        parts = next;
    }
    parts.pop().expect("at least one block")
}

/// Run `trajectory(index, accumulator, counters)` for every trajectory and reduce.
pub fn reduce_trajectories<E, F>(n_traj: usize, template: &GridAccumulator, trajectory: F) -> Result<(GridAccumulator, RunCounters), E>
where
    E: Send,
    F: Fn(usize, &mut GridAccumulator, &mut RunCounters) -> Result<(), E> + Sync,
{
    let n_blocks = n_traj.div_ceil(BLOCK_SIZE);
    let mut total = template.zeroed_like();
    let mut counters = RunCounters::default();
    for wave_start in (0..n_blocks).step_by(BLOCKS_PER_WAVE) {
        let wave_end = (wave_start + BLOCKS_PER_WAVE).min(n_blocks);
        let blocks: Result<Vec<_>, E> = (wave_start..wave_end)
            .into_par_iter()
            .map(|b| {
                let mut acc = template.zeroed_like();
                let mut c = RunCounters::default();
                for j in b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(n_traj) {
                    trajectory(j, &mut acc, &mut c)?;
                }
                Ok((acc, c))
            })
            .collect();
        let (wave, c) = pairwise(blocks?);
        total.merge(&wave);
        counters.merge(&c);
    }
    Ok((total, counters))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(threads: usize) -> Vec<f64> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let template = GridAccumulator::new(3, 2, vec![]);
        pool.install(|| {
            reduce_trajectories::<(), _>(2500, &template, |j, acc, _| {
                let x = (j as f64 * 0.731).sin() * 1e3 + 1.0 / (j as f64 + 1.0);
                for r in 0..3 {
                    acc.add_site(r, 0, x, x * r as f64);
                    acc.add_site(r, 1, 1.0 / x, x);
                }
                Ok(())
            })
        })
        .unwrap()
        .0
        .data
    }

    #[test]
    fn reduction_is_independent_of_worker_count() {
        let a = run(1);
        assert_eq!(a, run(3));
        assert_eq!(a, run(8));
    }
}
