use std::f64::consts::{PI, TAU};

use rand::RngCore;
use thiserror::Error;

use super::rng::{StreamKind, TrajectoryStream};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("theta0 must lie in (0, pi], got {0}")]
pub struct SamplingError(pub f64);

/// Polar angle of the fully inverted phase-space point, `π - arccos(1/√3)`.
pub fn theta_up() -> f64 {
    PI - (1.0 / 3f64.sqrt()).acos()
}

/// A point on the single-emitter phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub theta: f64,
    pub phi: f64,
}

impl PhasePoint {
    /// Weyl symbol of the Pauli vector, `√3 (sinθ cosφ, sinθ sinφ, -cosθ)`.
    pub fn spin_vector(&self) -> [f64; 3] {
        let r = 3f64.sqrt();
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [r * st * cp, r * st * sp, -r * ct]
    }

    /// Weyl symbol of `σ†σ`.
    pub fn occupation(&self) -> f64 {
        let (st, ct) = self.theta.sin_cos();
        0.75 * st * st - 0.5 * 3f64.sqrt() * ct
    }
}

#[inline]
fn u64_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn u64_to_sign(x: u64) -> f64 {
    if x >> 63 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Draw one emitter's initial phase-space point for the product state with
/// inversion angle `theta0`. Consumes exactly two `u64` draws.
///
/// For `theta0 = π` the polar angle is fixed at [`theta_up`] and φ is uniform.
/// Otherwise `q, p ∈ {±1}` are drawn and
/// `θ = arccos((cosθ0 - q sinθ0)/√3)`, `φ = atan2(p, q cosθ0 + sinθ0)`.
pub fn sample_initial_phase_point<R: RngCore + ?Sized>(theta0: f64, rng: &mut R) -> Result<PhasePoint, SamplingError> {
    if !(theta0 > 0.0 && theta0 <= PI) {
        return Err(SamplingError(theta0));
    }
    let a = rng.next_u64();
    let b = rng.next_u64();
    if theta0 == PI {
        return Ok(PhasePoint { theta: theta_up(), phi: TAU * u64_to_unit(a) });
    }
    Ok(phase_point_from_signs(theta0, u64_to_sign(a), u64_to_sign(b)))
}

/// The partially inverted sampling map for fixed signs `q, p`.
pub fn phase_point_from_signs(theta0: f64, q: f64, p: f64) -> PhasePoint {
    let (s0, c0) = theta0.sin_cos();
    let theta = ((c0 - q * s0) / 3f64.sqrt()).clamp(-1.0, 1.0).acos();
    let phi = p.atan2(q * c0 + s0).rem_euclid(TAU);
    PhasePoint { theta, phi }
}

/// Initial point of site `site` (1-based) on trajectory `trajectory`.
///
/// Draws are keyed by site, so site `n` starts identically for any chain length.
pub fn initial_point_for(seed: u64, trajectory: u64, site: usize, theta0: f64) -> Result<PhasePoint, SamplingError> {
    let mut stream = TrajectoryStream::new(seed, trajectory, StreamKind::InitialState);
    stream.seek(site as u64, 4);
    sample_initial_phase_point(theta0, &mut stream)
}
