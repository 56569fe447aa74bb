//! Simulation of a cascaded chain of two-level emitters coupled through a
//! chiral waveguide with propagation delay.
//!
//! Solvers share [`model::SimulationConfig`] and record into
//! [`grid::ObservableGrid`]: the truncated Wigner ensemble ([`twa`]), the exact
//! master equation and quantum-jump trajectories ([`oracle`]) and the mean-field
//! hierarchy ([`mft`]). [`analysis`] derives peaks, plateaus and fits from any of
//! them.

pub mod analysis;
pub mod grid;
pub mod io;
pub mod mft;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod twa;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] model::ConfigError),
    #[error(transparent)]
    Twa(#[from] twa::TwaError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Mft(#[from] mft::MftError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Frame(#[from] model::FrameError),
}

impl Error {
    /// Invalid parameters or a solver size limit, as opposed to a numerical or I/O failure.
    pub fn is_guard_violation(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Twa(twa::TwaError::Config(_)) => true,
            Error::Oracle(oracle::OracleError::Config(_) | oracle::OracleError::DimensionGuard { .. }) => true,
            Error::Mft(mft::MftError::Config(_)) => true,
            _ => false,
        }
    }
}
