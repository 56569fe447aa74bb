//! Solver-agnostic observable time series.
//!
//! All solvers record on the shifted-frame grid `t_s = i * dt_sample`. Site
//! occupations, the per-sample emission-rate estimator, and the equal-time
//! correlators `<σ_n† σ_m>` (m < n) are stored there; the physical frame is
//! recovered by reading site `n`'s series `(N - n) tau` later.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{FrameError, ShiftedFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Twa,
    Me,
    Qjump,
    MftDiscrete,
}

impl SolverKind {
    pub fn tag(self) -> &'static str {
        match self {
            SolverKind::Twa => "twa",
            SolverKind::Me => "me",
            SolverKind::Qjump => "qjump",
            SolverKind::MftDiscrete => "mft_discrete",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [SolverKind::Twa, SolverKind::Me, SolverKind::Qjump, SolverKind::MftDiscrete]
            .into_iter()
            .find(|k| k.tag() == tag)
    }
}

/// A mean time series with its standard error (zero for deterministic solvers).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Series {
    pub fn exact(mean: Vec<f64>) -> Self {
        let stderr = vec![0.0; mean.len()];
        Self { mean, stderr }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    fn slice(&self, start: usize, len: usize) -> Series {
        Series { mean: self.mean[start..start + len].to_vec(), stderr: self.stderr[start..start + len].to_vec() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComplexSeries {
    pub re: Series,
    pub im: Series,
}

impl ComplexSeries {
    pub fn value(&self, i: usize) -> Complex64 {
        Complex64::new(self.re.mean[i], self.im.mean[i])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableGrid {
    pub solver: SolverKind,
    pub n_sites: usize,
    pub gamma: f64,
    pub tau: f64,
    /// Spacing of recorded samples.
    pub dt: f64,
    pub samples_per_tau: usize,
    /// Samples available in the physical frame for every site.
    pub physical_len: usize,
    /// Shifted-frame occupation `<σ_n†σ_n>`, indexed by `site - 1`.
    pub occupation: Vec<Series>,
    /// Shifted-frame emission-rate estimator `Γ(C_nn + 2 Σ_{m<n, active} Re C_nm)`.
    pub rate: Vec<Series>,
    /// Shifted-frame `<σ_n† σ_m>` keyed by 1-based `(n, m)`, `m < n`.
    pub correlators: BTreeMap<(usize, usize), ComplexSeries>,
    pub n_traj: usize,
}

/// Physical-frame emission rate of one site.
#[derive(Clone, Debug, PartialEq)]
pub struct EmissionRate {
    pub site: usize,
    pub times: Vec<f64>,
    pub rate: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Largest deviation between `rate` and `-d/dt <σ_n†σ_n>` by central differences,
    /// away from activation kinks.
    pub fd_max_deviation: f64,
    pub consistent: bool,
}

impl ObservableGrid {
    pub fn len(&self) -> usize {
        self.occupation.first().map_or(0, Series::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame(&self) -> ShiftedFrame {
        ShiftedFrame::new(self.n_sites, self.tau)
    }

    pub fn shifted_times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }

    pub fn physical_times(&self) -> Vec<f64> {
        (0..self.physical_len).map(|i| i as f64 * self.dt).collect()
    }

    fn physical(&self, series: &Series, site: usize) -> Result<Series, FrameError> {
        let frame = self.frame();
        let offset = frame.shift_samples(site, self.samples_per_tau)?;
        frame.unshift(&series.mean, site, self.samples_per_tau, self.physical_len)?;
        Ok(series.slice(offset, self.physical_len))
    }

    /// `C(n, n, t)` in the physical frame.
    pub fn occupation_physical(&self, site: usize) -> Result<Series, FrameError> {
        self.frame().check_site(site)?;
        self.physical(&self.occupation[site - 1], site)
    }

    /// `C(n, m, t) = tr{σ_n† σ_m ρ̂(t + (N - n) τ)}` in the physical frame, if recorded.
    pub fn correlator_physical(&self, n: usize, m: usize) -> Result<Option<ComplexSeries>, FrameError> {
        self.frame().check_site(n)?;
        let Some(c) = self.correlators.get(&(n, m)) else { return Ok(None) };
        Ok(Some(ComplexSeries { re: self.physical(&c.re, n)?, im: self.physical(&c.im, n)? }))
    }

    /// Emission rate `r_n(t)` from the recorded per-sample estimator, cross-checked
    /// against the finite-difference decay of the occupation.
    ///
    /// `fd_tolerance` is an absolute bound on the allowed deviation; pass `None`
    /// for `1% of max |r| + 3 max stderr`.
    pub fn emission_rate(&self, site: usize, fd_tolerance: Option<f64>) -> Result<EmissionRate, FrameError> {
        self.frame().check_site(site)?;
        let rate = self.physical(&self.rate[site - 1], site)?;
        let occ = self.occupation_physical(site)?;
        let fd_max_deviation = self.fd_deviation(site, &occ.mean, &rate.mean);
        let tol = fd_tolerance.unwrap_or_else(|| {
            let peak = rate.mean.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let se = rate.stderr.iter().fold(0.0f64, |a, &b| a.max(b));
            0.01 * peak + 3.0 * se
        });
        Ok(EmissionRate {
            site,
            times: self.physical_times(),
            rate: rate.mean,
            stderr: rate.stderr,
            fd_max_deviation,
            consistent: fd_max_deviation <= tol,
        })
    }

    /// `Γ{C(n,n,t) + 2 Σ_{m<n} Θ(t - (n-m)τ) Re C(n,m,t)}` assembled from the stored
    /// correlators; `None` when some upstream pair was not recorded.
    pub fn emission_rate_from_correlators(&self, site: usize) -> Result<Option<Vec<f64>>, FrameError> {
        let occ = self.occupation_physical(site)?;
        let mut total: Vec<f64> = occ.mean.clone();
        for m in 1..site {
            let Some(c) = self.correlator_physical(site, m)? else { return Ok(None) };
            let start = (site - m) * self.samples_per_tau;
            for (i, v) in total.iter_mut().enumerate().skip(start) {
                *v += 2.0 * c.re.mean[i];
            }
        }
        Ok(Some(total.into_iter().map(|v| self.gamma * v).collect()))
    }

    fn fd_deviation(&self, site: usize, occ: &[f64], rate: &[f64]) -> f64 {
        let kinks: Vec<usize> = (1..site).map(|m| (site - m) * self.samples_per_tau).collect();
        let near_kink = |i: usize| kinks.iter().any(|&k| i + 1 >= k && i <= k + 1);
        let mut worst = 0.0f64;
        for i in 1..occ.len().saturating_sub(1) {
            if near_kink(i) {
                continue;
            }
            let fd = -(occ[i + 1] - occ[i - 1]) / (2.0 * self.dt);
            worst = worst.max((fd - rate[i]).abs());
        }
        worst
    }

    /// Sites whose physical-frame emission rate can be formed.
    pub fn sites(&self) -> impl Iterator<Item = usize> {
        1..=self.n_sites
    }
}

/// Flat sum / sum-of-squares accumulator with the same layout as an [`ObservableGrid`].
#[derive(Clone, Debug)]
pub struct GridAccumulator {
    n_rec: usize,
    n_sites: usize,
    pairs: Vec<(usize, usize)>,
    pub(crate) data: Vec<f64>,
}

impl GridAccumulator {
    pub fn new(n_rec: usize, n_sites: usize, pairs: Vec<(usize, usize)>) -> Self {
        let len = n_rec * (4 * n_sites + 4 * pairs.len());
        Self { n_rec, n_sites, pairs, data: vec![0.0; len] }
    }

    pub fn zeroed_like(&self) -> Self {
        Self { n_rec: self.n_rec, n_sites: self.n_sites, pairs: self.pairs.clone(), data: vec![0.0; self.data.len()] }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    #[inline]
    fn row(&self) -> usize {
        4 * self.n_sites + 4 * self.pairs.len()
    }

    /// Add one sample of site `idx` (0-based) at record `r`.
    #[inline]
    pub fn add_site(&mut self, r: usize, idx: usize, occupation: f64, rate: f64) {
        let o = r * self.row() + 4 * idx;
        let d = &mut self.data[o..o + 4];
        d[0] += occupation;
        d[1] += occupation * occupation;
        d[2] += rate;
        d[3] += rate * rate;
    }

    /// Add one sample of pair number `p` (index into [`pairs`](Self::pairs)) at record `r`.
    #[inline]
    pub fn add_pair(&mut self, r: usize, p: usize, c: Complex64) {
        let o = r * self.row() + 4 * self.n_sites + 4 * p;
        let d = &mut self.data[o..o + 4];
        d[0] += c.re;
        d[1] += c.re * c.re;
        d[2] += c.im;
        d[3] += c.im * c.im;
    }

    pub fn merge(&mut self, other: &GridAccumulator) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    /// Turn sums over `count` samples into means and standard errors.
    pub fn finish(self, meta: GridMeta, count: usize) -> ObservableGrid {
        let row = self.row();
        let n = count as f64;
        let stats = |sum: f64, sq: f64| -> (f64, f64) {
            let mean = sum / n;
            if count < 2 {
                return (mean, 0.0);
            }
            let var = ((sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
            (mean, (var / n).sqrt())
        };
        let mut occupation = vec![Series::default(); self.n_sites];
        let mut rate = vec![Series::default(); self.n_sites];
        let mut corr = vec![ComplexSeries::default(); self.pairs.len()];
        for r in 0..self.n_rec {
            let base = r * row;
            for i in 0..self.n_sites {
                let d = &self.data[base + 4 * i..base + 4 * i + 4];
                let (m, s) = stats(d[0], d[1]);
                occupation[i].mean.push(m);
                occupation[i].stderr.push(s);
                let (m, s) = stats(d[2], d[3]);
                rate[i].mean.push(m);
                rate[i].stderr.push(s);
            }
            for (p, c) in corr.iter_mut().enumerate() {
                let o = base + 4 * self.n_sites + 4 * p;
                let d = &self.data[o..o + 4];
                let (m, s) = stats(d[0], d[1]);
                c.re.mean.push(m);
                c.re.stderr.push(s);
                let (m, s) = stats(d[2], d[3]);
                c.im.mean.push(m);
                c.im.stderr.push(s);
            }
        }
        ObservableGrid {
            solver: meta.solver,
            n_sites: self.n_sites,
            gamma: meta.gamma,
            tau: meta.tau,
            dt: meta.dt,
            samples_per_tau: meta.samples_per_tau,
            physical_len: meta.physical_len,
            occupation,
            rate,
            correlators: self.pairs.into_iter().zip(corr).collect(),
            n_traj: count,
        }
    }
}

/// Grid metadata that is not accumulated.
#[derive(Clone, Copy, Debug)]
pub struct GridMeta {
    pub solver: SolverKind,
    pub gamma: f64,
    pub tau: f64,
    pub dt: f64,
    pub samples_per_tau: usize,
    pub physical_len: usize,
}

impl GridMeta {
    pub fn from_config(solver: SolverKind, config: &crate::model::SimulationConfig) -> Self {
        Self {
            solver,
            gamma: config.gamma,
            tau: config.tau,
            dt: config.dt * config.record_every as f64,
            samples_per_tau: config.steps_per_tau() / config.record_every,
            physical_len: config.physical_steps() / config.record_every + 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_grid() -> ObservableGrid {
        // Two sites, tau = 2 samples, exponential occupations with exact rates.
        let dt = 0.01;
        let len = 60;
        let occ = |t: f64| (-t).exp();
        let occupation = (0..2).map(|_| Series::exact((0..len).map(|i| occ(i as f64 * dt)).collect())).collect();
        let rate = (0..2).map(|_| Series::exact((0..len).map(|i| occ(i as f64 * dt)).collect())).collect();
        ObservableGrid {
            solver: SolverKind::Me,
            n_sites: 2,
            gamma: 1.0,
            tau: 0.02,
            dt,
            samples_per_tau: 2,
            physical_len: 58,
            occupation,
            rate,
            correlators: BTreeMap::new(),
            n_traj: 1,
        }
    }

    #[test]
    fn unshifts_by_site() {
        let g = toy_grid();
        let phys1 = g.occupation_physical(1).unwrap();
        assert_eq!(phys1.mean[0], g.occupation[0].mean[2]);
        let phys2 = g.occupation_physical(2).unwrap();
        assert_eq!(phys2.mean[0], g.occupation[1].mean[0]);
        assert!(g.occupation_physical(3).is_err());
    }

    #[test]
    fn fd_consistency_flags() {
        let g = toy_grid();
        let r = g.emission_rate(2, Some(1e-3)).unwrap();
        assert!(r.consistent, "deviation {}", r.fd_max_deviation);
        let mut bad = g.clone();
        bad.rate[1].mean.iter_mut().for_each(|v| *v *= 1.5);
        assert!(!bad.emission_rate(2, Some(1e-3)).unwrap().consistent);
    }

    #[test]
    fn insufficient_horizon() {
        let mut g = toy_grid();
        g.physical_len = 59;
        assert!(matches!(g.occupation_physical(1), Err(FrameError::InsufficientHorizon { .. })));
    }

    #[test]
    fn accumulator_statistics() {
        let mut acc = GridAccumulator::new(1, 1, vec![]);
        for v in [1.0, 2.0, 3.0] {
            acc.add_site(0, 0, v, 2.0 * v);
        }
        let meta = GridMeta { solver: SolverKind::Twa, gamma: 1.0, tau: 0.0, dt: 1.0, samples_per_tau: 0, physical_len: 1 };
        let g = acc.finish(meta, 3);
        assert!((g.occupation[0].mean[0] - 2.0).abs() < 1e-15);
        // sample variance 1 → stderr 1/√3
        assert!((g.occupation[0].stderr[0] - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((g.rate[0].mean[0] - 4.0).abs() < 1e-15);
    }
}
