//! Fits of the equal-time correlation profile `C(n, n - j, t)` over the distance `j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::{levenberg_marquardt, linear_least_squares, LeastSquares};
use super::AnalysisError;

pub const MIN_FIT_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    /// `C0 exp(-(j - c3)² / c4²)`.
    Gaussian,
    /// `C0 exp(-(j - c3)² / c4²) + offset`.
    GaussianWithOffset,
    /// `C0 exp(-(j / ξ)^α)`.
    Kww,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    pub model: CorrelationModel,
    pub c0: f64,
    /// `ξ` for the compressed exponential, `c4` for the Gaussians.
    pub length: f64,
    pub center: Option<f64>,
    pub alpha: Option<f64>,
    pub offset: Option<f64>,
    /// Raw parameter vector in model order and its standard errors.
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub n_points: usize,
}

impl CorrelationFit {
    pub fn length_stderr(&self) -> f64 {
        match self.model {
            CorrelationModel::Kww => self.stderr[1],
            _ => self.stderr[2],
        }
    }

    pub fn alpha_stderr(&self) -> Option<f64> {
        (self.model == CorrelationModel::Kww).then(|| self.stderr[2])
    }

    pub fn evaluate(&self, j: f64) -> f64 {
        model_value(self.model, &self.params, j)
    }
}

fn model_value(model: CorrelationModel, p: &[f64], j: f64) -> f64 {
    match model {
        CorrelationModel::Gaussian => p[0] * (-((j - p[1]) / p[2]).powi(2)).exp(),
        CorrelationModel::GaussianWithOffset => p[0] * (-((j - p[1]) / p[2]).powi(2)).exp() + p[3],
        CorrelationModel::Kww => p[0] * (-(j / p[1]).powf(p[2])).exp(),
    }
}

/// Fit `c` at distances `j`. With `stderr` given, only points with
/// `C > 3 · stderr` enter; otherwise only positive points.
pub fn fit_correlations(
    j: &[f64],
    c: &[f64],
    stderr: Option<&[f64]>,
    model: CorrelationModel,
) -> Result<CorrelationFit, AnalysisError> {
    let usable: Vec<(f64, f64)> = j
        .iter()
        .zip(c)
        .enumerate()
        .filter(|&(i, (&x, &y))| x.is_finite() && y.is_finite() && y > 0.0 && stderr.is_none_or(|s| y > 3.0 * s[i]))
        .map(|(_, (&x, &y))| (x, y))
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(AnalysisError::TooFewPoints { needed: MIN_FIT_POINTS, got: usable.len() });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
    let residual = |p: &[f64]| -> Vec<f64> { x.iter().zip(&y).map(|(&x, &y)| model_value(model, p, x) - y).collect() };
    let fit = match model {
        CorrelationModel::Kww => {
            let p0 = kww_start(&x, &y).ok_or(AnalysisError::NoStartingPoint)?;
            let valid = |p: &[f64]| p[1] > 0.0 && p[2] > 0.0;
            levenberg_marquardt(&residual, &valid, &p0, 500)
        }
        CorrelationModel::Gaussian => {
            let p0 = gaussian_start(&x, &y).ok_or(AnalysisError::NoStartingPoint)?;
            levenberg_marquardt(&residual, &|p: &[f64]| p[2] != 0.0, &p0, 500)
        }
        CorrelationModel::GaussianWithOffset => {
            let lo = y.iter().cloned().fold(f64::MAX, f64::min);
            let mut best: Option<LeastSquares> = None;
            for off in [0.0, 0.5 * lo, 0.9 * lo] {
                let shifted: Vec<f64> = y.iter().map(|v| v - off).collect();
                let Some(g) = gaussian_start(&x, &shifted) else { continue };
                let p0 = [g[0], g[1], g[2], off];
                let f = levenberg_marquardt(&residual, &|p: &[f64]| p[2] != 0.0, &p0, 500);
                if best.as_ref().is_none_or(|b| f.residual_norm < b.residual_norm) {
                    best = Some(f);
                }
            }
            best.ok_or(AnalysisError::NoStartingPoint)?
        }
    };
    let mut params = fit.params.clone();
    if model != CorrelationModel::Kww {
        params[2] = params[2].abs();
    }
    Ok(CorrelationFit {
        model,
        c0: params[0],
        length: match model {
            CorrelationModel::Kww => params[1],
            _ => params[2],
        },
        center: (model != CorrelationModel::Kww).then(|| params[1]),
        alpha: (model == CorrelationModel::Kww).then(|| params[2]),
        offset: (model == CorrelationModel::GaussianWithOffset).then(|| params[3]),
        params,
        stderr: fit.stderr,
        residual_norm: fit.residual_norm,
        converged: fit.converged,
        n_points: x.len(),
    })
}

/// For each `α` on a grid over `[0.5, 3]` fit `ln C = a - b j^α` linearly and keep
/// the `(C0, ξ, α)` with the smallest residual in the original metric.
fn kww_start(x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..=50 {
        let alpha = 0.5 + 0.05 * k as f64;
        let design = DMatrix::from_fn(x.len(), 2, |i, c| if c == 0 { 1.0 } else { -x[i].abs().powf(alpha) });
        let Some((b, _, _)) = linear_least_squares(&design, &logs) else { continue };
        if b[1] <= 0.0 {
            continue;
        }
        let p = vec![b[0].exp(), b[1].powf(-1.0 / alpha), alpha];
        let cost: f64 = x.iter().zip(y).map(|(&x, &y)| (model_value(CorrelationModel::Kww, &p, x) - y).powi(2)).sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, p));
        }
    }
    best.map(|(_, p)| p)
}

/// Quadratic fit of `ln C` in `j`.
fn gaussian_start(x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    if y.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let design = DMatrix::from_fn(x.len(), 3, |i, c| x[i].powi(c as i32));
    let (b, _, _) = linear_least_squares(&design, &logs)?;
    if b[2] >= 0.0 {
        // flat or convex in log space: start from a broad Gaussian at the maximum
        let (imax, _) = y.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        let span = x.iter().cloned().fold(f64::MIN, f64::max) - x.iter().cloned().fold(f64::MAX, f64::min);
        return Some(vec![y[imax], x[imax], span.max(1.0)]);
    }
    let c3 = -b[1] / (2.0 * b[2]);
    let c4 = (-1.0 / b[2]).sqrt();
    let c0 = (b[0] - b[1] * b[1] / (4.0 * b[2])).exp();
    Some(vec![c0, c3, c4])
}
