//! Scaling-law fits against the delay.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::{levenberg_marquardt, linear_least_squares};
use super::AnalysisError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// `y = A x^exponent`.
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub prefactor: f64,
    /// Standard error of `ln A`.
    pub log_prefactor_stderr: f64,
    pub n_points: usize,
    pub decades: f64,
}

fn span_decades(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    (hi / lo).log10()
}

fn check(x: &[f64], y: &[f64], min_points: usize, min_decades: f64) -> Result<f64, AnalysisError> {
    if x.len() != y.len() || x.len() < min_points {
        return Err(AnalysisError::TooFewPoints { needed: min_points, got: x.len().min(y.len()) });
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(AnalysisError::NonPositive);
    }
    let decades = span_decades(x);
    if decades < min_decades * (1.0 - 1e-9) {
        return Err(AnalysisError::InsufficientRange { decades, needed: min_decades });
    }
    Ok(decades)
}

/// Log–log least squares over at least five points spanning a decade.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLawFit, AnalysisError> {
    fit_power_law_with(x, y, 5, 1.0)
}

pub fn fit_power_law_with(x: &[f64], y: &[f64], min_points: usize, min_decades: f64) -> Result<PowerLawFit, AnalysisError> {
    let decades = check(x, y, min_points, min_decades)?;
    let design = DMatrix::from_fn(x.len(), 2, |i, c| if c == 0 { 1.0 } else { x[i].ln() });
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (b, se, _) = linear_least_squares(&design, &logs).ok_or(AnalysisError::Singular)?;
    Ok(PowerLawFit {
        exponent: b[1],
        exponent_stderr: se[1],
        prefactor: b[0].exp(),
        log_prefactor_stderr: se[0],
        n_points: x.len(),
        decades,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogCorrectedFit {
    /// `t = c3 (τ/Γ)^{1/2} ln(c4 / (Γτ))`.
    pub c3: f64,
    pub c4: f64,
    pub c3_stderr: f64,
    pub c4_stderr: f64,
    pub residual_norm: f64,
    pub converged: bool,
}

impl LogCorrectedFit {
    pub fn evaluate(&self, tau: f64, gamma: f64) -> f64 {
        self.c3 * (tau / gamma).sqrt() * (self.c4 / (gamma * tau)).ln()
    }
}

/// Two-parameter fit of peak times. The model is linear in `(c3, c3 ln c4)` after
/// dividing by `√(τ/Γ)`, which provides the starting point for the fit in the
/// original metric.
pub fn fit_log_corrected(tau: &[f64], t_eff: &[f64], gamma: f64) -> Result<LogCorrectedFit, AnalysisError> {
    check(tau, t_eff, 3, 0.0)?;
    let scale: Vec<f64> = tau.iter().map(|t| (t / gamma).sqrt()).collect();
    let design = DMatrix::from_fn(tau.len(), 2, |i, c| if c == 0 { 1.0 } else { -(gamma * tau[i]).ln() });
    let reduced: Vec<f64> = t_eff.iter().zip(&scale).map(|(t, s)| t / s).collect();
    let (b, _, _) = linear_least_squares(&design, &reduced).ok_or(AnalysisError::Singular)?;
    let p0 = [b[1], b[0] / b[1]];
    let residual = |p: &[f64]| -> Vec<f64> {
        tau.iter().zip(t_eff).zip(&scale).map(|((tau, t), s)| p[0] * s * (p[1] - (gamma * tau).ln()) - t).collect()
    };
    let fit = levenberg_marquardt(&residual, &|_| true, &p0, 200);
    let c4 = fit.params[1].exp();
    Ok(LogCorrectedFit {
        c3: fit.params[0],
        c4,
        c3_stderr: fit.stderr[0],
        c4_stderr: c4 * fit.stderr[1],
        residual_norm: fit.residual_norm,
        converged: fit.converged,
    })
}
