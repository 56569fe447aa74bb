//! Drift and diffusion of the phase-space SDEs in the shifted frame.
//!
//! These are the reference, term-by-term forms. The integrator in the parent
//! module fuses them with observable accumulation and is tested against them.

use crate::model::{PhasePoint, SimulationConfig};

pub(crate) const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The two Wiener increments of one trajectory step, shared by every site.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseDraw {
    pub dw1: f64,
    pub dw2: f64,
}

/// Parameters of one SDE step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwaParams {
    pub n_sites: usize,
    pub gamma: f64,
    pub dt: f64,
    pub steps_per_tau: usize,
    /// Multiplies the Wiener increments (`Γ` or `√Γ`).
    pub noise_coeff: f64,
}

impl TwaParams {
    pub fn from_config(config: &SimulationConfig) -> Self {
        Self {
            n_sites: config.n_sites,
            gamma: config.gamma,
            dt: config.dt,
            steps_per_tau: config.steps_per_tau(),
            noise_coeff: config.noise_prefactor.coefficient(config.gamma),
        }
    }

    /// Θ(t - (N - n) τ) at integer step `step` for 1-based `site`.
    #[inline]
    pub fn active(&self, site: usize, step: usize) -> bool {
        step >= (self.n_sites - site) * self.steps_per_tau
    }
}

/// Deterministic increments `(dθ_n, dφ_n)` for every site of one trajectory at step `step`.
///
/// `dθ_n = dθ_n|loc + dθ_n|coh`, `dφ_n = dφ_n|coh`, each already multiplied by `dt`.
pub fn drift(state: &[PhasePoint], step: usize, params: &TwaParams) -> Vec<(f64, f64)> {
    let g = params.gamma;
    let dt = params.dt;
    (1..=state.len())
        .map(|n| {
            let p = state[n - 1];
            let (st, ct) = p.theta.sin_cos();
            let cot = ct / st;
            let mut dtheta = 0.0;
            let mut dphi = 0.0;
            if params.active(n, step) {
                dtheta -= 0.5 * SQRT3 * g * (st - cot / SQRT3) * dt;
            }
            for m in 1..n {
                if !params.active(m, step) {
                    continue;
                }
                let q = state[m - 1];
                let dphase = p.phi - q.phi;
                let stm = q.theta.sin();
                dtheta -= SQRT3 * g * dphase.cos() * stm * dt;
                dphi += SQRT3 * g * dphase.sin() * cot * stm * dt;
            }
            (dtheta, dphi)
        })
        .collect()
}

/// Stochastic increments `(dθ_n|diss, dφ_n|diss)` for one shared noise draw.
pub fn diffusion(state: &[PhasePoint], noise: NoiseDraw, step: usize, params: &TwaParams) -> Vec<(f64, f64)> {
    let c = params.noise_coeff;
    (1..=state.len())
        .map(|n| {
            if !params.active(n, step) {
                return (0.0, 0.0);
            }
            let p = state[n - 1];
            let (sp, cp) = p.phi.sin_cos();
            let (st, ct) = p.theta.sin_cos();
            let cot = ct / st;
            (c * (cp * noise.dw1 - sp * noise.dw2), -c * cot * (sp * noise.dw1 + cp * noise.dw2))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn params(n_sites: usize, steps_per_tau: usize) -> TwaParams {
        TwaParams { n_sites, gamma: 1.3, dt: 1e-3, steps_per_tau, noise_coeff: 1.3f64.sqrt() }
    }

    #[test]
    fn single_site_at_equator() {
        let p = params(1, 0);
        let d = drift(&[PhasePoint { theta: PI / 2.0, phi: 0.4 }], 0, &p);
        assert!((d[0].0 + 0.5 * SQRT3 * 1.3 * 1e-3).abs() < 1e-16);
        assert!(d[0].1.abs() < 1e-16);
    }

    #[test]
    fn inactive_site_is_frozen() {
        // Site 1 of 2 activates after one delay (5 steps).
        let p = params(2, 5);
        let state = [PhasePoint { theta: 1.0, phi: 0.2 }, PhasePoint { theta: 2.0, phi: 1.0 }];
        let d = drift(&state, 4, &p);
        assert_eq!(d[0], (0.0, 0.0));
        let n = diffusion(&state, NoiseDraw { dw1: 0.1, dw2: -0.2 }, 4, &p);
        assert_eq!(n[0], (0.0, 0.0));
        assert_ne!(n[1], (0.0, 0.0));
    }

    #[test]
    fn aligned_phases_two_sites() {
        let p = params(2, 0);
        let (t1, t2) = (1.1, 2.2);
        let state = [PhasePoint { theta: t1, phi: 0.7 }, PhasePoint { theta: t2, phi: 0.7 }];
        let d = drift(&state, 0, &p);
        let local = -0.5 * SQRT3 * 1.3 * (t2.sin() - t2.cos() / t2.sin() / SQRT3) * 1e-3;
        assert!((d[1].0 - (local - SQRT3 * 1.3 * t1.sin() * 1e-3)).abs() < 1e-15);
        assert!(d[1].1.abs() < 1e-18);
    }

    #[test]
    fn diffusion_examples() {
        let p = params(3, 0);
        let state = [PhasePoint { theta: 0.9, phi: 0.0 }; 3];
        assert!(diffusion(&state, NoiseDraw::default(), 0, &p).iter().all(|&d| d == (0.0, 0.0)));
        let noise = NoiseDraw { dw1: 0.03, dw2: -0.01 };
        let d = diffusion(&state, noise, 0, &p);
        let c = p.noise_coeff;
        let cot = 0.9f64.cos() / 0.9f64.sin();
        assert!((d[0].0 - c * 0.03).abs() < 1e-16);
        assert!((d[0].1 + c * cot * -0.01).abs() < 1e-16);
    }

    #[test]
    fn collective_noise_is_recoverable() {
        // dθ_n|diss = c (cosφ_n dW1 - sinφ_n dW2): regressing on (cosφ_n, -sinφ_n)
        // across sites recovers the same (dW1, dW2).
        let p = params(6, 0);
        let state: Vec<PhasePoint> = (0..6).map(|i| PhasePoint { theta: 0.5 + 0.3 * i as f64, phi: 1.1 * i as f64 }).collect();
        let noise = NoiseDraw { dw1: 0.021, dw2: -0.037 };
        let d = diffusion(&state, noise, 0, &p);
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (s, inc) in state.iter().zip(&d) {
            let (x1, x2) = (s.phi.cos(), -s.phi.sin());
            a11 += x1 * x1;
            a12 += x1 * x2;
            a22 += x2 * x2;
            b1 += x1 * inc.0 / p.noise_coeff;
            b2 += x2 * inc.0 / p.noise_coeff;
        }
        let det = a11 * a22 - a12 * a12;
        let w1 = (a22 * b1 - a12 * b2) / det;
        let w2 = (a11 * b2 - a12 * b1) / det;
        assert!((w1 - noise.dw1).abs() < 1e-14 && (w2 - noise.dw2).abs() < 1e-14);
    }
}
