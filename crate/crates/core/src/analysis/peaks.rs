//! Peak emission rate and time of a single site.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Moving-average pre-smoothing applied before locating the discrete argmax.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// Use the raw series.
    #[default]
    Off,
    /// Centered window of `min(15 samples, t_pk / 10)`, for Monte Carlo series.
    Auto,
    /// Centered window of the given (odd) width.
    Window(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakResult {
    pub site: usize,
    pub t_pk: f64,
    pub r_pk: f64,
    /// Width of the moving-average window actually used (1 = none).
    pub window: usize,
    /// False when the maximum sits at `t = 0` (no burst).
    pub superradiant: bool,
    /// The series is still rising somewhere after the peak's neighbourhood at the horizon.
    pub horizon_warning: bool,
}

fn moving_average(v: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..v.len())
        .map(|i| {
            let (a, b) = (i.saturating_sub(half), (i + half + 1).min(v.len()));
            v[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

/// Relative drop after a local maximum that makes it the top of a burst.
pub const PEAK_PROMINENCE: f64 = 0.05;

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

/// Top of the earliest interior burst: a local maximum after which the series falls
/// by [`PEAK_PROMINENCE`] before exceeding it.
fn first_burst(v: &[f64]) -> Option<usize> {
    let mut i = 1;
    while i + 1 < v.len() {
        if v[i] > v[i - 1] && v[i] >= v[i + 1] {
            let top = v[i];
            let level = top - PEAK_PROMINENCE * top.abs();
            let mut k = i + 1;
            while k < v.len() && v[k] <= top && v[k] > level {
                k += 1;
            }
            if k == v.len() || v[k] <= level {
                return Some(i);
            }
            i = k;
        } else {
            i += 1;
        }
    }
    None
}

/// Locate the maximum of `values` on the uniform grid `times` and refine it with a
/// least-squares parabola through the unsmoothed samples near the argmax.
///
/// The peak is the first burst; later and possibly larger bursts (mean-field ringing)
/// are ignored. Without an interior burst the result is the boundary maximum.
pub fn find_peak(times: &[f64], values: &[f64], site: usize, smoothing: Smoothing) -> Result<PeakResult, AnalysisError> {
    if times.len() != values.len() || values.len() < 3 {
        return Err(AnalysisError::TooFewPoints { needed: 3, got: values.len().min(times.len()) });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let raw_max = argmax(values);
    let window = match smoothing {
        Smoothing::Off => 1,
        Smoothing::Window(w) => w.max(1) | 1,
        Smoothing::Auto => {
            // t_pk / 10 in samples on the uniform grid
            (raw_max / 10).clamp(1, 15) | 1
        }
    };
    let smooth = if window > 1 { moving_average(values, window) } else { values.to_vec() };
    let last = values.len() - 1;
    let i = match first_burst(&smooth) {
        Some(i) => i,
        None if argmax(&smooth) == 0 => 0,
        None => return Err(AnalysisError::NoInteriorMaximum { site }),
    };
    if i == 0 {
        return Ok(PeakResult { site, t_pk: times[0], r_pk: values[0], window, superradiant: false, horizon_warning: false });
    }
    let half = (window / 2).max(1);
    let (a, b) = (i.saturating_sub(half), (i + half).min(last));
    // parabola in local coordinates s = (t - t_i) / dt
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for k in a..=b {
        let s = (k as f64) - (i as f64);
        let basis = [1.0, s, s * s];
        for r in 0..3 {
            rhs[r] += basis[r] * values[k];
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
        }
    }
    let fallback = {
        let k = (a..=b).fold(a, |best, k| if values[k] > values[best] { k } else { best });
        (times[k], values[k])
    };
    let (t_pk, r_pk) = match solve3(m, rhs) {
        Some([c0, c1, c2]) if c2 < 0.0 => {
            let s = -c1 / (2.0 * c2);
            if s.abs() <= (half as f64) {
                (times[i] + s * dt, c0 + c1 * s + c2 * s * s)
            } else {
                fallback
            }
        }
        _ => fallback,
    };
    let tail = &smooth[(b + 1).min(last)..];
    let horizon_warning = tail.len() >= 2 && tail[tail.len() - 1] > tail[tail.len() - 2];
    Ok(PeakResult { site, t_pk, r_pk, window, superradiant: true, horizon_warning })
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let a = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
    let x = a.lu().solve(&nalgebra::Vector3::new(r[0], r[1], r[2]))?;
    Some([x[0], x[1], x[2]])
}
