//! Model parameters, the time-shifted frame, and initial-state sampling shared by
//! every solver.

mod config;
mod frame;
pub mod rng;
mod sampling;

pub use config::{ConfigError, CorrelatorSelection, NoisePrefactor, SimulationConfig, MAX_GAMMA_DT};
pub use frame::{FrameError, ShiftedFrame};
pub use sampling::{initial_point_for, phase_point_from_signs, sample_initial_phase_point, theta_up, PhasePoint, SamplingError};

/// Activation time `(N - n) tau` of site `n` (1-based).
pub fn activation_time(site: usize, frame: &ShiftedFrame) -> Result<f64, FrameError> {
    frame.activation_time(site)
}
