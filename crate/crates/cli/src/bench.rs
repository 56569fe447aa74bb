//! Throughput of the phase-space solver.

use std::time::Instant;

use chiralwg::model::SimulationConfig;
use chiralwg::twa;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct BenchResult {
    pub n_sites: usize,
    pub n_traj: usize,
    pub steps: usize,
    pub site_steps: u64,
    pub wall_seconds: f64,
    pub ns_per_site_step: f64,
    pub threads: usize,
}

pub fn bench_twa(config: &SimulationConfig) -> Result<BenchResult, chiralwg::Error> {
    let start = Instant::now();
    let run = twa::integrate(config)?;
    let wall = start.elapsed().as_secs_f64();
    let site_steps = run.counters.site_steps;
    Ok(BenchResult {
        n_sites: config.n_sites,
        n_traj: config.n_traj,
        steps: config.shifted_steps(),
        site_steps,
        wall_seconds: wall,
        ns_per_site_step: wall * 1e9 / site_steps.max(1) as f64,
        threads: rayon::current_num_threads(),
    })
}
