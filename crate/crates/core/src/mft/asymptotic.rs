//! Far-downstream limit: the pendulum `(Γτ) θ̈∞ + sin θ∞ = 0` with `θ∞(0) = θ0`,
//! `θ̇∞(0) = 0`.

use super::elliptic::complete_elliptic_k;
use super::MftError;

/// Fourth-order symplectic composition coefficients.
const YOSHIDA_W1: f64 = 1.351_207_191_959_657_8;
const YOSHIDA_W0: f64 = -1.702_414_383_919_315_3;

/// Tabulated pendulum trajectory with quintic Hermite evaluation.
#[derive(Clone, Debug)]
pub struct AsymptoticSolution {
    pub theta0: f64,
    pub gamma_tau: f64,
    /// `k = 1 / sin(θ0/2)`.
    pub k: f64,
    /// `φ0 = F(θ0/2 | k²)`, evaluated through the reciprocal-modulus identity
    /// `F(θ0/2 | k²) = K(1/k²) / k`.
    pub phi0: f64,
    step: f64,
    theta: Vec<f64>,
    omega: Vec<f64>,
}

impl AsymptoticSolution {
    /// Integrate over ten oscillations.
    pub fn new(theta0: f64, gamma_tau: f64) -> Result<Self, MftError> {
        check(theta0, gamma_tau)?;
        let horizon = 10.0 * 2.0 * burst(theta0, gamma_tau);
        Self::with_horizon(theta0, gamma_tau, horizon)
    }

    pub fn with_horizon(theta0: f64, gamma_tau: f64, t_max: f64) -> Result<Self, MftError> {
        check(theta0, gamma_tau)?;
        let k = 1.0 / (0.5 * theta0).sin();
        let phi0 = complete_elliptic_k(1.0 / (k * k)) / k;
        // ~4000 steps per small-oscillation period
        let step = 2.0 * std::f64::consts::PI * gamma_tau.sqrt() / 4000.0;
        let n = (t_max / step).ceil() as usize + 1;
        let mut theta = Vec::with_capacity(n + 1);
        let mut omega = Vec::with_capacity(n + 1);
        let (mut q, mut p) = (theta0, 0.0);
        theta.push(q);
        omega.push(p);
        let accel = |q: f64| -q.sin() / gamma_tau;
        for _ in 0..n {
            for w in [YOSHIDA_W1, YOSHIDA_W0, YOSHIDA_W1] {
                q += 0.5 * w * step * p;
                p += w * step * accel(q);
                q += 0.5 * w * step * p;
            }
            theta.push(q);
            omega.push(p);
        }
        Ok(Self { theta0, gamma_tau, k, phi0, step, theta, omega })
    }

    /// Covered time range.
    pub fn t_max(&self) -> f64 {
        (self.theta.len() - 1) as f64 * self.step
    }

    /// `T = 2k √(Γτ) K(1 - k²)`.
    pub fn period(&self) -> f64 {
        2.0 * self.k * self.gamma_tau.sqrt() * complete_elliptic_k(1.0 - self.k * self.k)
    }

    /// Spacing of consecutive zeros of `θ∞`, equal to the repetition time of the
    /// emission bursts: `2 √(Γτ) K(sin²(θ0/2))`, half the pendulum period.
    pub fn burst_period(&self) -> f64 {
        burst(self.theta0, self.gamma_tau)
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        assert!(t >= 0.0 && t <= self.t_max() + 1e-12, "t = {t} outside [0, {}]", self.t_max());
        let x = t / self.step;
        let i = (x.floor() as usize).min(self.theta.len() - 2);
        (i, x - i as f64)
    }

    /// `(θ∞, θ̇∞)` at time `t` by quintic Hermite interpolation.
    pub fn state(&self, t: f64) -> (f64, f64) {
        let (i, s) = self.locate(t);
        let h = self.step;
        let g = self.gamma_tau;
        let (q0, q1) = (self.theta[i], self.theta[i + 1]);
        let (p0, p1) = (self.omega[i], self.omega[i + 1]);
        let (a0, a1) = (-q0.sin() / g, -q1.sin() / g);
        let jerk0 = -q0.cos() * p0 / g;
        let jerk1 = -q1.cos() * p1 / g;
        (hermite5(s, h, q0, p0, a0, q1, p1, a1), hermite5(s, h, p0, a0, jerk0, p1, a1, jerk1))
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.state(t).0
    }

    /// `r∞(t) = -(1/2) sin θ∞ θ̇∞`.
    pub fn rate(&self, t: f64) -> f64 {
        let (q, p) = self.state(t);
        -0.5 * q.sin() * p
    }

    /// `(Γτ) θ̇²/2 - cos θ`.
    pub fn energy(&self, t: f64) -> f64 {
        let (q, p) = self.state(t);
        0.5 * self.gamma_tau * p * p - q.cos()
    }

    /// `max_t |r∞(t)|` from energy conservation: the maximum of
    /// `(1/2) sin θ √(2 (cos θ - cos θ0) / Γτ)` over the swing.
    pub fn max_rate(&self) -> f64 {
        let c0 = self.theta0.cos();
        let c = (c0 + (c0 * c0 + 3.0).sqrt()) / 3.0;
        0.5 * ((1.0 - c * c) * 2.0 * (c - c0) / self.gamma_tau).sqrt()
    }

    /// Times where `θ∞` changes sign, located by bisection on the interpolant.
    pub fn zero_crossings(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.theta.len() - 1 {
            if self.theta[i] > 0.0 && self.theta[i + 1] <= 0.0 || self.theta[i] < 0.0 && self.theta[i + 1] >= 0.0 {
                let (mut a, mut b) = (i as f64 * self.step, (i + 1) as f64 * self.step);
                let fa = self.theta(a);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if (self.theta(m) > 0.0) == (fa > 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        out
    }

    /// Tabulated samples `(t, θ, θ̇)`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.theta.iter().zip(&self.omega).enumerate().map(move |(i, (q, p))| (i as f64 * self.step, *q, *p))
    }
}

fn check(theta0: f64, gamma_tau: f64) -> Result<(), MftError> {
    if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
        return Err(MftError::Theta0(theta0));
    }
    if !(gamma_tau > 0.0 && gamma_tau.is_finite()) {
        return Err(MftError::GammaTau(gamma_tau));
    }
    Ok(())
}

fn burst(theta0: f64, gamma_tau: f64) -> f64 {
    2.0 * gamma_tau.sqrt() * complete_elliptic_k((0.5 * theta0).sin().powi(2))
}

/// Quintic Hermite interpolant on `[0, h]` at fraction `s` from value, first and
/// second derivative at both ends.
#[allow(clippy::too_many_arguments)]
pub(crate) fn hermite5(s: f64, h: f64, y0: f64, d0: f64, c0: f64, y1: f64, d1: f64, c1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    h00 * y0 + h10 * h * d0 + h20 * h * h * c0 + h01 * y1 + h11 * h * d1 + h21 * h * h * c1
}
