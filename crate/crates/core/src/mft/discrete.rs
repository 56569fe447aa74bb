//! Discrete time-shifted mean-field equations for `s_n = ⟨σ_n⟩` and
//! `s_n^z = ⟨σ_n^z⟩ / 2`.

use num_complex::Complex64;

use super::{sin_rel, MftError};
use crate::grid::{GridAccumulator, GridMeta, ObservableGrid, SolverKind};
use crate::model::SimulationConfig;

/// Per-site mean-field state in the shifted frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMftState {
    pub s: Vec<Complex64>,
    pub sz: Vec<f64>,
}

impl DiscreteMftState {
    pub fn product(n_sites: usize, theta0: f64) -> Self {
        Self { s: vec![Complex64::new(0.5 * sin_rel(theta0), 0.0); n_sites], sz: vec![-0.5 * theta0.cos(); n_sites] }
    }

    /// `|s_n|² + (s_n^z)²` per site.
    pub fn bloch_norms(&self) -> Vec<f64> {
        self.s.iter().zip(&self.sz).map(|(s, z)| s.norm_sqr() + z * z).collect()
    }

    /// Occupation `s_n^z + 1/2`.
    pub fn occupation(&self, n: usize) -> f64 {
        self.sz[n - 1] + 0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscreteMftOptions {
    /// Keep the independent-decay terms; without them the Bloch norm is conserved.
    pub include_onsite: bool,
}

impl Default for DiscreteMftOptions {
    fn default() -> Self {
        Self { include_onsite: true }
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteMftRun {
    pub grid: ObservableGrid,
    pub final_state: DiscreteMftState,
    /// Largest `| |s_n|² + (s_n^z)² - initial |` over sites and records.
    pub norm_drift: f64,
}

/// Derivatives of `(s, s^z)` with sites `first..=N` active.
fn derivative(state: &DiscreteMftState, first: usize, gamma: f64, onsite: bool) -> DiscreteMftState {
    let n_sites = state.s.len();
    let mut ds = vec![Complex64::new(0.0, 0.0); n_sites];
    let mut dz = vec![0.0; n_sites];
    let mut upstream = Complex64::new(0.0, 0.0);
    for idx in first.max(1) - 1..n_sites {
        let (s, z) = (state.s[idx], state.sz[idx]);
        ds[idx] = 2.0 * gamma * z * upstream;
        dz[idx] = -2.0 * gamma * (s.conj() * upstream).re;
        if onsite {
            ds[idx] -= 0.5 * gamma * s;
            dz[idx] -= gamma * (z + 0.5);
        }
        upstream += s;
    }
    DiscreteMftState { s: ds, sz: dz }
}

fn axpy(base: &DiscreteMftState, k: &DiscreteMftState, h: f64) -> DiscreteMftState {
    DiscreteMftState {
        s: base.s.iter().zip(&k.s).map(|(a, b)| a + h * b).collect(),
        sz: base.sz.iter().zip(&k.sz).map(|(a, b)| a + h * b).collect(),
    }
}

pub fn solve_discrete_mft(config: &SimulationConfig) -> Result<DiscreteMftRun, MftError> {
    solve_discrete_mft_with(config, DiscreteMftOptions::default())
}

/// Classical RK4 in the shifted frame with the activation mask fixed over each step.
pub fn solve_discrete_mft_with(config: &SimulationConfig, options: DiscreteMftOptions) -> Result<DiscreteMftRun, MftError> {
    config.validate()?;
    let (gamma, dt) = (config.gamma, config.dt);
    let frame = config.frame();
    let k = config.steps_per_tau();
    let total = config.shifted_steps();
    let onsite = options.include_onsite;
    let mut acc = GridAccumulator::new(total / config.record_every + 1, config.n_sites, config.correlator_pairs());
    let pairs = acc.pairs().to_vec();
    let mut state = DiscreteMftState::product(config.n_sites, config.theta0);
    let norm0 = state.bloch_norms();
    let mut norm_drift = 0.0f64;
    for step in 0..=total {
        let first = frame.first_active(step, k);
        if step % config.record_every == 0 {
            let r = step / config.record_every;
            let d = derivative(&state, first, gamma, onsite);
            for n in 1..=config.n_sites {
                acc.add_site(r, n - 1, state.occupation(n), -d.sz[n - 1]);
            }
            for (p, &(n, m)) in pairs.iter().enumerate() {
                acc.add_pair(r, p, state.s[n - 1].conj() * state.s[m - 1]);
            }
            for (a, b) in state.bloch_norms().iter().zip(&norm0) {
                norm_drift = norm_drift.max((a - b).abs());
            }
        }
        if step == total {
            break;
        }
        let k1 = derivative(&state, first, gamma, onsite);
        let k2 = derivative(&axpy(&state, &k1, 0.5 * dt), first, gamma, onsite);
        let k3 = derivative(&axpy(&state, &k2, 0.5 * dt), first, gamma, onsite);
        let k4 = derivative(&axpy(&state, &k3, dt), first, gamma, onsite);
        for i in 0..config.n_sites {
            state.s[i] += dt / 6.0 * (k1.s[i] + 2.0 * k2.s[i] + 2.0 * k3.s[i] + k4.s[i]);
            state.sz[i] += dt / 6.0 * (k1.sz[i] + 2.0 * k2.sz[i] + 2.0 * k3.sz[i] + k4.sz[i]);
        }
        if !state.sz.iter().all(|z| z.is_finite()) {
            return Err(MftError::NonFinite(format!("discrete mean field at step {step}")));
        }
    }
    Ok(DiscreteMftRun {
        grid: acc.finish(GridMeta::from_config(SolverKind::MftDiscrete, config), 1),
        final_state: state,
        norm_drift,
    })
}
