//! Waveguide field intensity and photon bookkeeping.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::grid::ObservableGrid;

/// `I_n(t) = (1/v) Σ_{m≤n} Θ(t - (n-m)τ) r_m(t - (n-m)τ)` on the sample grid.
///
/// `rates[m - 1]` is `r_m` in the physical frame; the delay is `samples_per_tau`
/// samples and `v = 1/τ` (or 1 for `τ = 0`). The output has the length of `r_n`.
pub fn field_intensity(rates: &[Vec<f64>], samples_per_tau: usize, tau: f64) -> Result<Vec<f64>, AnalysisError> {
    let n = rates.len();
    if n == 0 {
        return Err(AnalysisError::TooFewPoints { needed: 1, got: 0 });
    }
    let inv_v = if tau > 0.0 { tau } else { 1.0 };
    let len = rates[n - 1].len();
    let mut out = vec![0.0; len];
    for (idx, r) in rates.iter().enumerate() {
        let lag = (n - 1 - idx) * samples_per_tau;
        let needed = len.saturating_sub(lag);
        if r.len() < needed {
            return Err(AnalysisError::MissingCoverage { site: idx + 1, needed, available: r.len() });
        }
        for i in lag..len {
            out[i] += inv_v * r[i - lag];
        }
    }
    Ok(out)
}

pub fn field_intensity_from_grid(grid: &ObservableGrid, site: usize) -> Result<Vec<f64>, AnalysisError> {
    let rates = (1..=site).map(|m| grid.emission_rate(m, None).map(|e| e.rate)).collect::<Result<Vec<_>, _>>()?;
    field_intensity(&rates, grid.samples_per_tau, grid.tau)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonBalance {
    /// `v ∫ I_N dt` over the recorded horizon.
    pub emitted: f64,
    /// `Σ_n [C(n,n,0) - C(n,n,t_max)]`.
    pub excitation_loss: f64,
    pub relative_error: f64,
}

/// Compare the photon number passing the last site with the loss of excitations.
pub fn photon_balance(grid: &ObservableGrid) -> Result<PhotonBalance, AnalysisError> {
    let n = grid.n_sites;
    let intensity = field_intensity_from_grid(grid, n)?;
    let v = if grid.tau > 0.0 { 1.0 / grid.tau } else { 1.0 };
    let dt = grid.dt;
    let integral: f64 = intensity.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    let emitted = v * integral;
    let mut excitation_loss = 0.0;
    for m in 1..=n {
        let occ = grid.occupation_physical(m)?.mean;
        excitation_loss += occ[0] - occ[occ.len() - 1];
    }
    Ok(PhotonBalance { emitted, excitation_loss, relative_error: (emitted - excitation_loss).abs() / excitation_loss.abs() })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::model::SimulationConfig;
    use crate::oracle::integrate_master_equation;

    #[test]
    fn single_site_is_scaled_rate() {
        let r = vec![vec![0.5, 0.4, 0.3]];
        assert_eq!(field_intensity(&r, 2, 0.1).unwrap(), vec![0.05, 0.04000000000000001, 0.03]);
    }

    #[test]
    fn retarded_terms_gated() {
        let r = vec![vec![1.0; 6], vec![2.0; 6]];
        let i = field_intensity(&r, 2, 0.5).unwrap();
        assert_eq!(i, vec![1.0, 1.0, 1.5, 1.5, 1.5, 1.5]);
    }

    #[test]
    fn missing_upstream_samples() {
        let r = vec![vec![1.0; 2], vec![2.0; 6]];
        assert!(matches!(field_intensity(&r, 1, 0.5), Err(AnalysisError::MissingCoverage { site: 1, .. })));
    }

    #[test]
    fn photon_number_conserved_small_chain() {
        let c = SimulationConfig { n_sites: 3, tau: 0.05, dt: 1e-3, t_max: 12.0, record_every: 10, ..Default::default() };
        let run = integrate_master_equation(&c).unwrap();
        let b = photon_balance(&run.grid).unwrap();
        assert!(b.relative_error < 1e-2, "{b:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn single_emitter_bounded_by_gamma_over_v(theta0 in 0.1f64..std::f64::consts::PI, gamma in 0.5f64..2.0) {
            let c = SimulationConfig { n_sites: 1, gamma, tau: 0.1, theta0, dt: 1e-3, t_max: 2.0, ..Default::default() };
            let run = integrate_master_equation(&c).unwrap();
            let i = field_intensity_from_grid(&run.grid, 1).unwrap();
            prop_assert!(i.iter().all(|v| *v <= gamma * c.tau * (1.0 + 1e-12)));
        }
    }
}
