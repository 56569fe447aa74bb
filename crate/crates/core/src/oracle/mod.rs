//! Exact small-system references: dense integration of the time-shifted master
//! equation and its quantum-jump unraveling.

mod generator;
mod state;

use num_complex::Complex64;
use thiserror::Error;

pub use generator::EffectiveGenerator;
pub use state::{site_amplitudes, DensityOperator, PureState};

use crate::grid::{GridAccumulator, GridMeta, ObservableGrid, SolverKind};
use crate::model::rng::{StreamKind, TrajectoryStream};
use crate::model::{ConfigError, ShiftedFrame, SimulationConfig};
use crate::parallel::{reduce_trajectories, RunCounters};

/// Largest chain for the dense density matrix.
pub const MAX_ME_SITES: usize = 6;
/// Largest chain for dense state-vector trajectories.
pub const MAX_QJUMP_SITES: usize = 14;
/// Largest jump probability accepted in one step.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;
/// Allowed trace drift of the master-equation run.
pub const MAX_TRACE_DRIFT: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{solver} supports at most {max} sites, got {n_sites}")]
    DimensionGuard { solver: &'static str, n_sites: usize, max: usize },
    #[error("jump probability {probability:.3} per step exceeds {MAX_JUMP_PROBABILITY}; reduce dt")]
    StepTooLarge { probability: f64 },
    #[error("trace drifted by {drift:e} (limit {MAX_TRACE_DRIFT:e})")]
    TraceDrift { drift: f64 },
}

/// Result of a master-equation run.
#[derive(Debug, Clone)]
pub struct MasterRun {
    pub grid: ObservableGrid,
    pub trace_drift: f64,
}

/// Result of a trajectory run.
#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    pub grid: ObservableGrid,
    pub counters: RunCounters,
}

/// `dρ/dt` at shifted time `t`; the mask contains every site with `t ≥ (N - n) τ`.
pub fn liouvillian_apply(rho: &DensityOperator, t: f64, config: &SimulationConfig) -> DensityOperator {
    generator_at_time(t, config).liouvillian(rho)
}

fn generator_at_time(t: f64, config: &SimulationConfig) -> EffectiveGenerator {
    let k = config.steps_per_tau();
    let step = (t / config.dt + 1e-9).floor() as usize;
    let first = ShiftedFrame::new(config.n_sites, config.tau).first_active(step, k);
    EffectiveGenerator::new(config.n_sites, config.gamma, first)
}

fn guard(config: &SimulationConfig, solver: &'static str, max: usize) -> Result<(), OracleError> {
    config.validate()?;
    if config.n_sites > max {
        return Err(OracleError::DimensionGuard { solver, n_sites: config.n_sites, max });
    }
    Ok(())
}

/// Record occupations, rate estimator and selected pairs from `c[n-1][m-1] = ⟨σ_n†σ_m⟩`.
fn record(acc: &mut GridAccumulator, r: usize, c: &[Vec<Complex64>], first: usize, gamma: f64) {
    let n_sites = c.len();
    for n in 1..=n_sites {
        let occ = c[n - 1][n - 1].re;
        let mut rate = occ;
        if n >= first {
            rate += 2.0 * (first..n).map(|m| c[n - 1][m - 1].re).sum::<f64>();
        }
        acc.add_site(r, n - 1, occ, gamma * rate);
    }
    let pairs = acc.pairs().to_vec();
    for (p, (n, m)) in pairs.into_iter().enumerate() {
        acc.add_pair(r, p, c[n - 1][m - 1]);
    }
}

/// Stepper for the dense time-shifted master equation (classical RK4, mask fixed
/// at the start of each step).
#[derive(Debug, Clone)]
pub struct MasterEquation {
    pub rho: DensityOperator,
    pub step: usize,
    n_sites: usize,
    gamma: f64,
    dt: f64,
    steps_per_tau: usize,
}

impl MasterEquation {
    pub fn new(config: &SimulationConfig) -> Result<Self, OracleError> {
        guard(config, "me", MAX_ME_SITES)?;
        Ok(Self {
            rho: DensityOperator::product(config.n_sites, config.theta0),
            step: 0,
            n_sites: config.n_sites,
            gamma: config.gamma,
            dt: config.dt,
            steps_per_tau: config.steps_per_tau(),
        })
    }

    pub fn generator(&self) -> EffectiveGenerator {
        let first = ShiftedFrame::new(self.n_sites, 0.0).first_active(self.step, self.steps_per_tau);
        EffectiveGenerator::new(self.n_sites, self.gamma, first)
    }

    pub fn advance(&mut self) {
        let g = self.generator();
        let h = self.dt;
        let k1 = g.liouvillian(&self.rho);
        let mut y = self.rho.clone();
        y.axpy(0.5 * h, &k1);
        let k2 = g.liouvillian(&y);
        let mut y = self.rho.clone();
        y.axpy(0.5 * h, &k2);
        let k3 = g.liouvillian(&y);
        let mut y = self.rho.clone();
        y.axpy(h, &k3);
        let k4 = g.liouvillian(&y);
        for (i, r) in self.rho.data.iter_mut().enumerate() {
            *r += h / 6.0 * (k1.data[i] + 2.0 * k2.data[i] + 2.0 * k3.data[i] + k4.data[i]);
        }
        self.step += 1;
    }

    pub fn correlation_matrix(&self) -> Vec<Vec<Complex64>> {
        (1..=self.n_sites).map(|n| (1..=self.n_sites).map(|m| self.rho.correlator(n, m)).collect()).collect()
    }
}

/// Integrate the master equation over the shifted horizon `t_max + (N-1) τ`.
pub fn integrate_master_equation(config: &SimulationConfig) -> Result<MasterRun, OracleError> {
    let mut me = MasterEquation::new(config)?;
    let total = config.shifted_steps();
    let frame = config.frame();
    let k = config.steps_per_tau();
    let mut acc = GridAccumulator::new(total / config.record_every + 1, config.n_sites, config.correlator_pairs());
    let mut trace_drift = 0.0f64;
    loop {
        let s = me.step;
        if s % config.record_every == 0 {
            record(&mut acc, s / config.record_every, &me.correlation_matrix(), frame.first_active(s, k), config.gamma);
            trace_drift = trace_drift.max((me.rho.trace() - 1.0).norm());
        }
        if s == total {
            break;
        }
        me.advance();
    }
    if trace_drift > MAX_TRACE_DRIFT {
        return Err(OracleError::TraceDrift { drift: trace_drift });
    }
    Ok(MasterRun { grid: acc.finish(GridMeta::from_config(SolverKind::Me, config), 1), trace_drift })
}

/// First-order no-jump update `(1 - i ℋ_eff δt)|ψ⟩`, not renormalized.
pub fn no_jump_update(psi: &PureState, generator: &EffectiveGenerator, dt: f64) -> PureState {
    let h = generator.apply_hamiltonian(&psi.amplitudes);
    let amplitudes = psi.amplitudes.iter().zip(h).map(|(a, h)| a - Complex64::new(0.0, dt) * h).collect();
    PureState { n_sites: psi.n_sites, amplitudes }
}

/// One trajectory step: with probability `δp = Γ⟨S†S⟩δt` apply `S`, otherwise the
/// non-Hermitian update; renormalize either way. Returns whether a jump occurred.
/// `psi` must be normalized.
pub fn effective_hamiltonian_step(
    psi: &PureState,
    generator: &EffectiveGenerator,
    dt: f64,
    rng: &mut TrajectoryStream,
) -> Result<(PureState, bool), OracleError> {
    let jumped = generator.apply_jump(&psi.amplitudes);
    let weight: f64 = jumped.iter().map(|a| a.norm_sqr()).sum();
    let probability = generator.gamma * weight * dt;
    if probability > MAX_JUMP_PROBABILITY {
        return Err(OracleError::StepTooLarge { probability });
    }
    let u = rng.uniform();
    let (mut next, jump) = if u < probability {
        (PureState { n_sites: psi.n_sites, amplitudes: jumped }, true)
    } else {
        (no_jump_update(psi, generator, dt), false)
    };
    next.normalize();
    Ok((next, jump))
}

/// Quantum-jump ensemble over the shifted horizon; same grid layout as the TWA solver.
pub fn trajectory_observables(config: &SimulationConfig) -> Result<TrajectoryRun, OracleError> {
    guard(config, "qjump", MAX_QJUMP_SITES)?;
    let total = config.shifted_steps();
    let frame = config.frame();
    let k = config.steps_per_tau();
    let template = GridAccumulator::new(total / config.record_every + 1, config.n_sites, config.correlator_pairs());
    let (acc, counters) = reduce_trajectories(config.n_traj, &template, |j, acc, counters| {
        let mut psi = PureState::product(config.n_sites, config.theta0);
        let mut rng = TrajectoryStream::new(config.seed, j as u64, StreamKind::Jumps);
        for s in 0..=total {
            let first = frame.first_active(s, k);
            if s % config.record_every == 0 {
                record(acc, s / config.record_every, &psi.correlation_matrix(), first, config.gamma);
            }
            if s == total {
                break;
            }
            let g = EffectiveGenerator::new(config.n_sites, config.gamma, first);
            let (next, jumped) = effective_hamiltonian_step(&psi, &g, config.dt, &mut rng)?;
            psi = next;
            counters.jumps += jumped as u64;
            counters.site_steps += (config.n_sites + 1 - first) as u64;
        }
        Ok::<(), OracleError>(())
    })?;
    Ok(TrajectoryRun { grid: acc.finish(GridMeta::from_config(SolverKind::Qjump, config), config.n_traj), counters })
}
