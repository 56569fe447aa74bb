//! Mean-field solvers: the continuum delay equation, its delay-free
//! self-similar reduction, the discrete shifted-frame equations and the
//! far-downstream pendulum limit.

pub mod asymptotic;
pub mod discrete;
pub mod elliptic;
pub mod pde;
pub mod sine_gordon;

use crate::model::ConfigError;

pub use asymptotic::AsymptoticSolution;
pub use discrete::{solve_discrete_mft, solve_discrete_mft_with, DiscreteMftOptions, DiscreteMftRun, DiscreteMftState};
pub use elliptic::complete_elliptic_k;
pub use pde::{rescale_solution, solve_continuum_pde, ContinuumSolution, PdeGrid};
pub use sine_gordon::{solve_sine_gordon_ode, SineGordonSolution};

#[derive(Debug, thiserror::Error)]
pub enum MftError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("theta0 = {0} outside (0, pi)")]
    Theta0(f64),
    #[error("gamma*tau = {0} not allowed here")]
    GammaTau(f64),
    #[error("theta0 = pi is a fixed point of the mean-field dynamics")]
    Adynamical,
    #[error("domain: {0}")]
    Domain(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("unbounded growth at x = {x}, t = {t} (gamma*tau*dx/dt = {courant})")]
    Instability { x: f64, t: f64, courant: f64 },
}

/// Pendulum limit `θ∞` for the given delay.
pub fn asymptotic_solution(theta0: f64, gamma_tau: f64) -> Result<AsymptoticSolution, MftError> {
    AsymptoticSolution::new(theta0, gamma_tau)
}

/// `sin θ` evaluated as `sin(π - θ)` on the upper half so that `θ = π` gives zero exactly.
#[inline]
pub(crate) fn sin_rel(theta: f64) -> f64 {
    if theta > std::f64::consts::FRAC_PI_2 {
        (std::f64::consts::PI - theta).sin()
    } else {
        theta.sin()
    }
}
