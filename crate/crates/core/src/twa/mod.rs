//! Truncated Wigner ensemble for the cascaded chain.
//!
//! Each trajectory carries `N` spin directions driven by two Wiener increments
//! shared by all sites. Noise for shifted step `s` is drawn from clock tick
//! `s - (N-1) k` (k = steps per delay) and initial points are keyed by site, so
//! the draws seen by sites `1..=n` do not depend on the chain length.

mod sde;

use std::f64::consts::{PI, TAU};


use num_complex::Complex64;
use thiserror::Error;

pub use sde::{diffusion, drift, NoiseDraw, TwaParams};
use sde::SQRT3;

pub use crate::grid::{EmissionRate, ObservableGrid};
use crate::grid::{GridAccumulator, GridMeta, SolverKind};
use crate::model::rng::{StreamKind, TrajectoryStream};
use crate::model::{initial_point_for, ConfigError, PhasePoint, SamplingError, ShiftedFrame, SimulationConfig};
use crate::parallel::{reduce_trajectories, RunCounters};

/// Clamp margin keeping θ away from the poles of cot θ.
pub const THETA_MIN: f64 = 1e-6;
/// Largest tolerated fraction of clamped (site, step) pairs.
pub const MAX_CLAMP_FRACTION: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum TwaError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("trajectory {trajectory} became non-finite at step {step} (site {site})")]
    NonFinite { trajectory: usize, step: usize, site: usize },
    #[error("{clamps} of {site_steps} site-steps hit the theta clamp (limit {MAX_CLAMP_FRACTION}); reduce dt")]
    ClampBudget { clamps: u64, site_steps: u64 },
}

/// Result of an ensemble integration.
#[derive(Debug, Clone)]
pub struct TwaRun {
    pub grid: ObservableGrid,
    pub counters: RunCounters,
}

/// Ensemble of phase-space points at a common shifted-frame step.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceEnsemble {
    /// `trajectories[j][n - 1]` is site `n` of trajectory `j`.
    pub trajectories: Vec<Vec<PhasePoint>>,
    pub step: usize,
    pub dt: f64,
}

impl PhaseSpaceEnsemble {
    /// Sample the initial product state with the same draws `integrate` uses.
    pub fn sample(config: &SimulationConfig) -> Result<Self, TwaError> {
        config.validate()?;
        let trajectories = (0..config.n_traj)
            .map(|j| {
                (1..=config.n_sites)
                    .map(|n| initial_point_for(config.seed, j as u64, n, config.theta0))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { trajectories, step: 0, dt: config.dt })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// Noise of trajectory `j` at the current step, as drawn by `integrate`.
    pub fn noise(&self, config: &SimulationConfig, j: usize) -> NoiseDraw {
        let mut stream = TrajectoryStream::new(config.seed, j as u64, StreamKind::Noise);
        let origin = -(((config.n_sites - 1) * config.steps_per_tau()) as i64);
        stream.seek_clock(origin + self.step as i64, 4);
        let (z1, z2) = stream.normal_pair();
        let s = config.dt.sqrt();
        NoiseDraw { dw1: s * z1, dw2: s * z2 }
    }

    /// One step of every trajectory with upstream sums formed site by site.
    pub fn step(&mut self, config: &SimulationConfig) -> u64 {
        let kernel = Kernel::from_config(config);
        let params = TwaParams::from_config(config);
        let mut clamps = 0;
        for j in 0..self.trajectories.len() {
            let noise = self.noise(config, j);
            let old: Vec<[f64; 3]> = self.trajectories[j].iter().map(|p| to_cartesian(*p)).collect();
            for n in 1..=old.len() {
                if !params.active(n, self.step) {
                    continue;
                }
                let (mut a, mut b) = (0.0, 0.0);
                for m in 1..n {
                    if params.active(m, self.step) {
                        a += old[m - 1][0];
                        b += old[m - 1][1];
                    }
                }
                let (u, clamped) = kernel.advance(old[n - 1], a, b, noise);
                clamps += clamped as u64;
                let phi = self.trajectories[j][n - 1].phi;
                let mut p = from_cartesian(u);
                // keep φ continuous so that it can be compared with unwrapped angles
                p.phi = phi + (p.phi - phi + PI).rem_euclid(TAU) - PI;
                self.trajectories[j][n - 1] = p;
            }
        }
        self.step += 1;
        clamps
    }

    /// Angles with φ reduced to [0, 2π).
    pub fn wrapped(&self) -> Vec<Vec<PhasePoint>> {
        self.trajectories
            .iter()
            .map(|t| t.iter().map(|p| PhasePoint { theta: p.theta, phi: p.phi.rem_euclid(TAU) }).collect())
            .collect()
    }
}

/// Trajectory average of the Weyl symbol of `σ_n†σ_n`, `(3/4) sin²θ_n - (√3/2) cosθ_n`.
pub fn weyl_occupation(ensemble: &PhaseSpaceEnsemble, site: usize) -> f64 {
    let n = ensemble.trajectories.len() as f64;
    ensemble.trajectories.iter().map(|t| t[site - 1].occupation()).sum::<f64>() / n
}

/// Trajectory average of `(3/4) e^{i(φ_n - φ_m)} sinθ_n sinθ_m`, the symbol of `σ_n†σ_m`, n ≠ m.
pub fn weyl_correlator(ensemble: &PhaseSpaceEnsemble, n: usize, m: usize) -> Complex64 {
    assert_ne!(n, m, "use weyl_occupation for the diagonal");
    let count = ensemble.trajectories.len() as f64;
    ensemble
        .trajectories
        .iter()
        .map(|t| {
            let (a, b) = (t[n - 1], t[m - 1]);
            Complex64::from_polar(0.75 * a.theta.sin() * b.theta.sin(), a.phi - b.phi)
        })
        .sum::<Complex64>()
        / count
}

/// Integrate the ensemble over the shifted horizon `t_max + (N-1) τ` and record
/// trajectory-averaged observables.
pub fn integrate(config: &SimulationConfig) -> Result<TwaRun, TwaError> {
    config.validate()?;
    let n_sites = config.n_sites;
    let pairs = config.correlator_pairs();
    let n_rec = config.shifted_steps() / config.record_every + 1;
    let template = GridAccumulator::new(n_rec, n_sites, pairs.clone());
    let pair_idx: Vec<(usize, usize)> = pairs.iter().map(|&(n, m)| (n - 1, m - 1)).collect();

    let (acc, counters) = reduce_trajectories(config.n_traj, &template, |j, acc, counters| {
        run_trajectory(config, j, &pair_idx, acc, counters)
    })?;
    let site_steps = counters.site_steps.max(1);
    if counters.clamp_events as f64 > MAX_CLAMP_FRACTION * site_steps as f64 {
        return Err(TwaError::ClampBudget { clamps: counters.clamp_events, site_steps });
    }
    let grid = acc.finish(GridMeta::from_config(SolverKind::Twa, config), config.n_traj);
    Ok(TwaRun { grid, counters })
}

/// Unit spin direction of a phase point.
pub fn to_cartesian(p: PhasePoint) -> [f64; 3] {
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Inverse of [`to_cartesian`], with φ in (-π, π].
pub fn from_cartesian(u: [f64; 3]) -> PhasePoint {
    let rho = u[0].hypot(u[1]);
    PhasePoint { theta: rho.atan2(u[2]), phi: u[1].atan2(u[0]) }
}

/// Single-site update on the unit sphere.
///
/// The Wiener increments act as the rotation `c (dW2 x + dW1 y) × u`, which is
/// norm preserving and reproduces the θ, φ noise together with the `c²/2 cot θ`
/// part of the local drift. The remaining drift is a bounded tangent vector
/// except for the `(Γ - c²)/2 cot θ` term that survives when `c² ≠ Γ`.
#[derive(Clone, Copy, Debug)]
struct Kernel {
    gamma: f64,
    dt: f64,
    c: f64,
    residual: f64,
}

impl Kernel {
    fn from_config(config: &SimulationConfig) -> Self {
        let c = config.noise_prefactor.coefficient(config.gamma);
        Self { gamma: config.gamma, dt: config.dt, c, residual: 0.5 * (config.gamma - c * c) }
    }

    /// Advance `u` given the upstream sums `a = Σ sinθ_m cosφ_m`, `b = Σ sinθ_m sinφ_m`.
    /// Returns the new direction and whether the polar clamp was hit.
    ///
    /// The drift enters as the rotation vector `u × v dt`, which for the tangent
    /// fields involved reduces to combinations of `ẑ × u` and `ẑ - u_z u`.
    #[inline(always)]
    fn advance(&self, u: [f64; 3], a: f64, b: f64, noise: NoiseDraw) -> ([f64; 3], bool) {
        let g = self.gamma;
        let rho2 = u[0] * u[0] + u[1] * u[1];
        let p = u[0] * a + u[1] * b;
        let q = u[1] * a - u[0] * b;
        let floor2 = THETA_MIN * THETA_MIN;
        let clamped = self.residual != 0.0 && rho2 < floor2;
        let inv = if rho2 > 0.0 { 1.0 / rho2.max(if self.residual != 0.0 { floor2 } else { 0.0 }) } else { 0.0 };
        let about_z = -0.5 * SQRT3 * g - SQRT3 * g * p * inv + self.residual * u[2] * inv;
        let tilt = SQRT3 * g * u[2] * q * inv;
        let dt = self.dt;
        let omega = [
            self.c * noise.dw2 + dt * (-about_z * u[1] - tilt * u[2] * u[0]),
            self.c * noise.dw1 + dt * (about_z * u[0] - tilt * u[2] * u[1]),
            dt * tilt * rho2,
        ];
        (rotate(u, omega), clamped)
    }
}

/// Rodrigues rotation of `u` by the rotation vector `omega`.
#[inline(always)]
fn rotate(u: [f64; 3], omega: [f64; 3]) -> [f64; 3] {
    let a2 = omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2];
    if a2 == 0.0 {
        return u;
    }
    // sin(a)/a and (1 - cos a)/a²; series below a = 0.1 keep full precision
    let (sinc, cosc) = if a2 < 1e-2 {
        (
            1.0 - a2 / 6.0 * (1.0 - a2 / 20.0 * (1.0 - a2 / 42.0)),
            0.5 - a2 / 24.0 * (1.0 - a2 / 30.0 * (1.0 - a2 / 56.0)),
        )
    } else {
        let a = a2.sqrt();
        (a.sin() / a, (1.0 - a.cos()) / a2)
    };
    let wxu = [omega[1] * u[2] - omega[2] * u[1], omega[2] * u[0] - omega[0] * u[2], omega[0] * u[1] - omega[1] * u[0]];
    let wdu = omega[0] * u[0] + omega[1] * u[1] + omega[2] * u[2];
    let c = 1.0 - a2 * cosc;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = u[i] * c + wxu[i] * sinc + omega[i] * wdu * cosc;
    }
    // one Newton step back onto the unit sphere against rounding drift
    let n2 = out[0] * out[0] + out[1] * out[1] + out[2] * out[2];
    let s = 1.5 - 0.5 * n2;
    [out[0] * s, out[1] * s, out[2] * s]
}

fn run_trajectory(
    config: &SimulationConfig,
    j: usize,
    pairs: &[(usize, usize)],
    acc: &mut GridAccumulator,
    counters: &mut RunCounters,
) -> Result<(), TwaError> {
    let n_sites = config.n_sites;
    let k = config.steps_per_tau();
    let frame = ShiftedFrame::new(n_sites, config.tau);
    let gamma = config.gamma;
    let sqrt_dt = config.dt.sqrt();
    let total_steps = config.shifted_steps();
    let kernel = Kernel::from_config(config);

    let mut u = Vec::with_capacity(n_sites);
    for n in 1..=n_sites {
        u.push(to_cartesian(initial_point_for(config.seed, j as u64, n, config.theta0)?));
    }
    let mut noise = TrajectoryStream::new(config.seed, j as u64, StreamKind::Noise);
    noise.seek_clock(-(((n_sites - 1) * k) as i64), 4);

    for step in 0..=total_steps {
        let first = frame.first_active(step, k) - 1;
        if step % config.record_every == 0 {
            let r = step / config.record_every;
            let (mut a, mut b) = (0.0, 0.0);
            for (i, s) in u.iter().enumerate() {
                let occ = 0.75 * (s[0] * s[0] + s[1] * s[1]) - 0.5 * SQRT3 * s[2];
                let mut cross = 0.0;
                if i >= first {
                    cross = s[0] * a + s[1] * b;
                    a += s[0];
                    b += s[1];
                }
                acc.add_site(r, i, occ, gamma * (occ + 1.5 * cross));
            }
            for (p, &(n, m)) in pairs.iter().enumerate() {
                let zn = Complex64::new(u[n][0], u[n][1]);
                let zm = Complex64::new(u[m][0], -u[m][1]);
                acc.add_pair(r, p, 0.75 * zn * zm);
            }
        }
        if step == total_steps {
            break;
        }
        let (z1, z2) = noise.normal_pair();
        let draw = NoiseDraw { dw1: sqrt_dt * z1, dw2: sqrt_dt * z2 };
        let (mut a, mut b) = (0.0, 0.0);
        for i in first..n_sites {
            let old = u[i];
            let (new, clamped) = kernel.advance(old, a, b, draw);
            if !new.iter().all(|x| x.is_finite()) {
                return Err(TwaError::NonFinite { trajectory: j, step, site: i + 1 });
            }
            counters.clamp_events += clamped as u64;
            a += old[0];
            b += old[1];
            u[i] = new;
        }
        counters.site_steps += (n_sites - first) as u64;
    }
    Ok(())
}

/// Physical-frame emission rate of `site` from a solver grid; see
/// [`ObservableGrid::emission_rate`].
pub fn emission_rate(grid: &ObservableGrid, site: usize) -> Result<EmissionRate, crate::model::FrameError> {
    grid.emission_rate(site, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{theta_up, NoisePrefactor};

    fn small(n_sites: usize, tau: f64, theta0: f64, n_traj: usize) -> SimulationConfig {
        SimulationConfig { n_sites, tau, theta0, dt: 1e-3, t_max: 0.2, n_traj, seed: 17, ..Default::default() }
    }

    #[test]
    fn fully_inverted_sample_has_unit_occupation() {
        let ens = PhaseSpaceEnsemble::sample(&small(3, 0.0, PI, 50)).unwrap();
        assert!(ens.trajectories.iter().flatten().all(|p| p.theta == theta_up()));
        assert!((weyl_occupation(&ens, 2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn initial_moments() {
        let ens = PhaseSpaceEnsemble::sample(&small(2, 0.0, PI / 2.0, 40_000)).unwrap();
        let occ: Vec<f64> = ens.trajectories.iter().map(|t| t[0].occupation()).collect();
        let mean = occ.iter().sum::<f64>() / occ.len() as f64;
        let var = occ.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (occ.len() - 1) as f64;
        let se = (var / occ.len() as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se + 1e-12, "mean {mean} se {se}");
        let ens = PhaseSpaceEnsemble::sample(&small(2, 0.0, PI, 40_000)).unwrap();
        assert!(weyl_correlator(&ens, 2, 1).norm() < 0.75 * 4.0 / 200.0);
    }

    #[test]
    fn fused_integrator_matches_reference_step() {
        let config = SimulationConfig { correlators: crate::model::CorrelatorSelection::All, ..small(4, 0.003, 0.7 * PI, 8) };
        let run = integrate(&config).unwrap();
        let mut ens = PhaseSpaceEnsemble::sample(&config).unwrap();
        let steps = config.shifted_steps();
        for s in 0..=steps {
            if s % 37 == 0 || s == steps {
                for n in 1..=4 {
                    let occ = weyl_occupation(&ens, n);
                    assert!((occ - run.grid.occupation[n - 1].mean[s]).abs() < 1e-10, "step {s} site {n}");
                    for m in 1..n {
                        let c = weyl_correlator(&ens, n, m);
                        assert!((c - run.grid.correlators[&(n, m)].value(s)).norm() < 1e-10);
                    }
                }
            }
            if s < steps {
                ens.step(&config);
            }
        }
    }

    #[test]
    fn sphere_step_is_weakly_equivalent_to_angle_sde() {
        // Averaging the kernel over the symmetric two-point noise reproduces the
        // Itô drift of u(θ, φ) implied by `drift` and `diffusion` to O(dt²).
        for (gamma, prefactor) in [(1.0, NoisePrefactor::SqrtGammaTimesDw), (2.0, NoisePrefactor::SqrtGammaTimesDw), (2.0, NoisePrefactor::GammaTimesDw)] {
            for dt in [1e-3, 1e-4] {
                let config = SimulationConfig { n_sites: 2, gamma, dt, noise_prefactor: prefactor, ..Default::default() };
                let params = TwaParams::from_config(&config);
                let kernel = Kernel::from_config(&config);
                let state = [PhasePoint { theta: 1.9, phi: 0.3 }, PhasePoint { theta: 0.8, phi: 2.5 }];
                let det = drift(&state, 0, &params)[1];
                let b1 = diffusion(&state, NoiseDraw { dw1: 1.0, dw2: 0.0 }, 0, &params)[1];
                let b2 = diffusion(&state, NoiseDraw { dw1: 0.0, dw2: 1.0 }, 0, &params)[1];
                let (th, ph) = (state[1].theta, state[1].phi);
                let (st, ct, sp, cp) = (th.sin(), th.cos(), ph.sin(), ph.cos());
                let u_t = [ct * cp, ct * sp, -st];
                let u_p = [-st * sp, st * cp, 0.0];
                let u_tt = [-st * cp, -st * sp, -ct];
                let u_tp = [-ct * sp, ct * cp, 0.0];
                let u_pp = [-st * cp, -st * sp, 0.0];
                let qtt = (b1.0 * b1.0 + b2.0 * b2.0) * dt;
                let qtp = (b1.0 * b1.1 + b2.0 * b2.1) * dt;
                let qpp = (b1.1 * b1.1 + b2.1 * b2.1) * dt;
                let u0 = to_cartesian(state[1]);
                let up = to_cartesian(state[0]);
                let s = dt.sqrt();
                let mut mean = [0.0; 3];
                for (d1, d2) in [(s, s), (s, -s), (-s, s), (-s, -s)] {
                    let (u, _) = kernel.advance(u0, up[0], up[1], NoiseDraw { dw1: d1, dw2: d2 });
                    for i in 0..3 {
                        mean[i] += 0.25 * (u[i] - u0[i]);
                    }
                }
                for i in 0..3 {
                    let ito = u_t[i] * det.0 + u_p[i] * det.1 + 0.5 * (u_tt[i] * qtt + 2.0 * u_tp[i] * qtp + u_pp[i] * qpp);
                    assert!((mean[i] - ito).abs() < 50.0 * dt * dt, "gamma {gamma} dt {dt} component {i}: {} vs {ito}", mean[i]);
                }
            }
        }
    }

    #[test]
    fn sphere_step_preserves_norm_through_the_pole() {
        let config = SimulationConfig { n_sites: 1, dt: 1e-2, ..Default::default() };
        let kernel = Kernel::from_config(&config);
        let (u, clamped) = kernel.advance([0.0, 0.0, 1.0], 0.0, 0.0, NoiseDraw { dw1: 0.1, dw2: 0.0 });
        assert!(!clamped);
        assert!((u[0] - 0.1f64.sin()).abs() < 1e-12 && (u[2] - 0.1f64.cos()).abs() < 1e-12);
        let p = from_cartesian(to_cartesian(PhasePoint { theta: 2.0, phi: -1.0 }));
        assert!((p.theta - 2.0).abs() < 1e-15 && (p.phi + 1.0).abs() < 1e-15);
    }

    #[test]
    fn frozen_before_activation() {
        let config = small(3, 0.05, 0.7 * PI, 64);
        let run = integrate(&config).unwrap();
        let g = &run.grid;
        // Site 1 activates after 2 tau = 100 steps.
        let occ1 = &g.occupation[0].mean;
        assert!(occ1[..=100].iter().all(|&v| v == occ1[0]));
        assert_ne!(occ1[101], occ1[0]);
        let occ2 = &g.occupation[1].mean;
        assert!(occ2[..=50].iter().all(|&v| v == occ2[0]));
    }

    #[test]
    fn deterministic_for_seed() {
        let config = small(3, 0.01, 0.8 * PI, 100);
        let a = integrate(&config).unwrap().grid;
        let b = integrate(&config).unwrap().grid;
        assert_eq!(a, b);
        let c = integrate(&SimulationConfig { seed: 18, ..config }).unwrap().grid;
        assert_ne!(a.occupation, c.occupation);
    }

    #[test]
    fn cascaded_sites_ignore_chain_length() {
        let short = small(3, 0.004, 0.7 * PI, 130);
        let long = SimulationConfig { n_sites: 5, ..short.clone() };
        let a = integrate(&short).unwrap().grid;
        let b = integrate(&long).unwrap().grid;
        for n in 1..=3 {
            assert_eq!(a.occupation_physical(n).unwrap(), b.occupation_physical(n).unwrap());
            assert_eq!(a.emission_rate(n, None).unwrap().rate, b.emission_rate(n, None).unwrap().rate);
        }
    }

    #[test]
    fn initial_rate_is_single_emitter_value() {
        let theta0 = 0.7 * PI;
        let config = SimulationConfig { n_traj: 20_000, ..small(3, 0.01, theta0, 0) };
        let g = integrate(&config).unwrap().grid;
        let expect = config.gamma * (theta0 / 2.0).sin().powi(2);
        for n in 1..=3 {
            let r = g.emission_rate(n, None).unwrap();
            assert!((r.rate[0] - expect).abs() < 3.0 * r.stderr[0], "site {n}: {} vs {expect}", r.rate[0]);
        }
    }
}
