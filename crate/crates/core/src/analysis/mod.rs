//! Derived quantities from any solver's observables: peaks, plateaus,
//! correlation fits, scaling laws and the waveguide intensity.

pub mod correlations;
pub mod fit;
pub mod intensity;
pub mod peaks;
pub mod plateau;
pub mod scaling;

pub use correlations::{fit_correlations, CorrelationFit, CorrelationModel};
pub use intensity::{field_intensity, field_intensity_from_grid, photon_balance, PhotonBalance};
pub use peaks::{find_peak, PeakResult, Smoothing};
pub use plateau::{extract_plateau, PlateauResult, PlateauSummary, DEFAULT_PLATEAU_TOLERANCE};
pub use scaling::{fit_log_corrected, fit_power_law, fit_power_law_with, LogCorrectedFit, PowerLawFit};

use crate::grid::ObservableGrid;
use crate::model::FrameError;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("site {site}: no interior maximum within the horizon")]
    NoInteriorMaximum { site: usize },
    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("abscissa spans {decades:.3} decades, need {needed}")]
    InsufficientRange { decades: f64, needed: f64 },
    #[error("log-log fit needs finite positive values")]
    NonPositive,
    #[error("non-finite input")]
    NonFinite,
    #[error("singular least-squares system")]
    Singular,
    #[error("no admissible starting point for the fit")]
    NoStartingPoint,
    #[error("site {site}: {available} samples available, {needed} needed")]
    MissingCoverage { site: usize, needed: usize, available: usize },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Peak of every site's physical-frame emission rate.
pub fn site_peaks(grid: &ObservableGrid, smoothing: Smoothing) -> Result<Vec<PeakResult>, AnalysisError> {
    grid.sites()
        .map(|n| {
            let e = grid.emission_rate(n, None)?;
            find_peak(&e.times, &e.rate, n, smoothing)
        })
        .collect()
}

/// `(j, Re C(n, n - j, t_i))` for `j = 1..n-1` at sample `i` of the physical frame,
/// with standard errors.
pub fn correlation_profile(grid: &ObservableGrid, n: usize, i: usize) -> Result<Option<[Vec<f64>; 3]>, AnalysisError> {
    let (mut j, mut c, mut se) = (Vec::new(), Vec::new(), Vec::new());
    for m in (1..n).rev() {
        let Some(s) = grid.correlator_physical(n, m)? else { return Ok(None) };
        if i >= s.re.len() {
            return Err(AnalysisError::MissingCoverage { site: n, needed: i + 1, available: s.re.len() });
        }
        j.push((n - m) as f64);
        c.push(s.re.mean[i]);
        se.push(s.re.stderr[i]);
    }
    Ok(Some([j, c, se]))
}
