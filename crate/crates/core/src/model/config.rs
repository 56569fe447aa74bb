use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest `gamma * dt` accepted unless `allow_coarse_dt` is set.
pub const MAX_GAMMA_DT: f64 = 0.01;

/// Relative slack when checking that `tau` is an integer multiple of `dt`.
const GRID_SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("n_sites must be at least 1")]
    NoSites,
    #[error("gamma must be positive and finite, got {0}")]
    Gamma(f64),
    #[error("tau must be non-negative and finite, got {0}")]
    Tau(f64),
    #[error("theta0 must lie in (0, pi], got {0}")]
    Theta0(f64),
    #[error("dt must be positive and finite, got {0}")]
    Dt(f64),
    #[error("t_max must be non-negative and finite, got {0}")]
    TMax(f64),
    #[error("n_traj must be at least 1")]
    NoTrajectories,
    #[error("record_every must be at least 1")]
    RecordEvery,
    #[error("tau = {tau} is not an integer multiple of dt = {dt}")]
    TauOffGrid { tau: f64, dt: f64 },
    #[error("tau/dt = {steps} steps is not a multiple of record_every = {record_every}")]
    TauOffRecordGrid { steps: usize, record_every: usize },
    #[error("gamma*dt = {0} exceeds {MAX_GAMMA_DT}; set allow_coarse_dt to override")]
    CoarseStep(f64),
    #[error("correlator site {0} is outside 1..=n_sites")]
    CorrelatorSite(usize),
}

/// Prefactor multiplying the Wiener increments in the phase-space SDEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoisePrefactor {
    /// `Γ dW`, as the increments are literally written.
    GammaTimesDw,
    /// `√Γ dW`, the dimensionally consistent Itô form.
    #[default]
    SqrtGammaTimesDw,
}

impl NoisePrefactor {
    pub fn coefficient(self, gamma: f64) -> f64 {
        match self {
            NoisePrefactor::GammaTimesDw => gamma,
            NoisePrefactor::SqrtGammaTimesDw => gamma.sqrt(),
        }
    }
}

/// Which equal-time correlators `<σ_n† σ_m>` (m < n) a solver records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorSelection {
    /// All pairs when `n_sites <= 16`, none otherwise.
    #[default]
    Auto,
    All,
    None,
    /// All pairs `(n, m)` with `m < n` for each listed site `n` (1-based).
    Sites(Vec<usize>),
}

/// Physical and numerical parameters shared by every solver.
///
/// Lengths are in units of the emitter spacing, so the group velocity is `1/tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_sites: usize,
    pub gamma: f64,
    pub tau: f64,
    pub theta0: f64,
    pub dt: f64,
    /// Horizon in the physical (unshifted) frame.
    pub t_max: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub noise_prefactor: NoisePrefactor,
    /// Record observables every this many integration steps.
    pub record_every: usize,
    pub correlators: CorrelatorSelection,
    pub allow_coarse_dt: bool,
    /// Report times in units of `1/gamma` in written outputs.
    pub normalized_output: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_sites: 1,
            gamma: 1.0,
            tau: 0.0,
            theta0: PI,
            dt: 1e-3,
            t_max: 3.0,
            n_traj: 20_000,
            seed: 0,
            noise_prefactor: NoisePrefactor::default(),
            record_every: 1,
            correlators: CorrelatorSelection::Auto,
            allow_coarse_dt: false,
            normalized_output: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_sites == 0 {
            return Err(ConfigError::NoSites);
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(ConfigError::Gamma(self.gamma));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(ConfigError::Tau(self.tau));
        }
        if !(self.theta0 > 0.0 && self.theta0 <= PI) {
            return Err(ConfigError::Theta0(self.theta0));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ConfigError::Dt(self.dt));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(ConfigError::TMax(self.t_max));
        }
        if self.n_traj == 0 {
            return Err(ConfigError::NoTrajectories);
        }
        if self.record_every == 0 {
            return Err(ConfigError::RecordEvery);
        }
        let steps = self.tau / self.dt;
        if self.tau > 0.0 && (steps - steps.round()).abs() > GRID_SNAP_TOL * steps.max(1.0) {
            return Err(ConfigError::TauOffGrid { tau: self.tau, dt: self.dt });
        }
        let k = steps.round() as usize;
        if k % self.record_every != 0 {
            return Err(ConfigError::TauOffRecordGrid { steps: k, record_every: self.record_every });
        }
        if !self.allow_coarse_dt && self.gamma * self.dt > MAX_GAMMA_DT * (1.0 + 1e-12) {
            return Err(ConfigError::CoarseStep(self.gamma * self.dt));
        }
        if let CorrelatorSelection::Sites(sites) = &self.correlators {
            if let Some(&bad) = sites.iter().find(|&&n| n == 0 || n > self.n_sites) {
                return Err(ConfigError::CorrelatorSite(bad));
            }
        }
        Ok(())
    }

    /// Integration steps per inter-site delay.
    pub fn steps_per_tau(&self) -> usize {
        (self.tau / self.dt).round() as usize
    }

    /// Integration steps covering the physical horizon.
    pub fn physical_steps(&self) -> usize {
        ((self.t_max / self.dt).round() as usize).div_ceil(self.record_every) * self.record_every
    }

    /// Integration steps covering the shifted-frame horizon `t_max + (N-1) tau`.
    pub fn shifted_steps(&self) -> usize {
        self.physical_steps() + (self.n_sites - 1) * self.steps_per_tau()
    }

    pub fn frame(&self) -> super::ShiftedFrame {
        super::ShiftedFrame::new(self.n_sites, self.tau)
    }

    /// Correlator pairs `(n, m)`, 1-based with `m < n`, in row-major order.
    pub fn correlator_pairs(&self) -> Vec<(usize, usize)> {
        let sites: Vec<usize> = match &self.correlators {
            CorrelatorSelection::Auto if self.n_sites <= 16 => (1..=self.n_sites).collect(),
            CorrelatorSelection::Auto | CorrelatorSelection::None => Vec::new(),
            CorrelatorSelection::All => (1..=self.n_sites).collect(),
            CorrelatorSelection::Sites(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                s
            }
        };
        sites.into_iter().flat_map(|n| (1..n).map(move |m| (n, m))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SimulationConfig {
        SimulationConfig { n_sites: 4, tau: 0.01, dt: 1e-3, ..Default::default() }
    }

    #[test]
    fn accepts_defaults() {
        base().validate().unwrap();
        SimulationConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_off_grid_tau() {
        let c = SimulationConfig { tau: 0.0105, ..base() };
        assert!(matches!(c.validate(), Err(ConfigError::TauOffGrid { .. })));
    }

    #[test]
    fn rejects_coarse_step_unless_allowed() {
        let mut c = SimulationConfig { dt: 0.05, tau: 0.1, ..base() };
        assert!(matches!(c.validate(), Err(ConfigError::CoarseStep(_))));
        c.allow_coarse_dt = true;
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_theta() {
        for theta0 in [0.0, -0.1, 3.2] {
            let c = SimulationConfig { theta0, ..base() };
            assert!(matches!(c.validate(), Err(ConfigError::Theta0(_))));
        }
    }

    #[test]
    fn record_grid_must_divide_delay() {
        let c = SimulationConfig { record_every: 3, ..base() };
        assert!(matches!(c.validate(), Err(ConfigError::TauOffRecordGrid { .. })));
        let c = SimulationConfig { record_every: 5, ..base() };
        c.validate().unwrap();
    }

    #[test]
    fn horizon_bookkeeping() {
        let c = SimulationConfig { t_max: 1.0, ..base() };
        assert_eq!(c.steps_per_tau(), 10);
        assert_eq!(c.physical_steps(), 1000);
        assert_eq!(c.shifted_steps(), 1030);
    }

    #[test]
    fn json_round_trip_and_partial_input() {
        let c = base();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SimulationConfig>(&s).unwrap(), c);
        let partial: SimulationConfig = serde_json::from_str(r#"{"n_sites": 3, "noise_prefactor": "gamma_times_dw"}"#).unwrap();
        assert_eq!(partial.n_sites, 3);
        assert_eq!(partial.noise_prefactor, NoisePrefactor::GammaTimesDw);
        assert!(serde_json::from_str::<SimulationConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn correlator_pairs() {
        let c = SimulationConfig { n_sites: 3, ..Default::default() };
        assert_eq!(c.correlator_pairs(), vec![(2, 1), (3, 1), (3, 2)]);
        let c = SimulationConfig { n_sites: 40, ..Default::default() };
        assert!(c.correlator_pairs().is_empty());
        let c = SimulationConfig { n_sites: 40, correlators: CorrelatorSelection::Sites(vec![3]), ..Default::default() };
        assert_eq!(c.correlator_pairs(), vec![(3, 1), (3, 2)]);
    }
}
