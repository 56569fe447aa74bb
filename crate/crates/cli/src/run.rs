//! Sweep execution: one solver run per point, per-point outputs, then analysis.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use chiralwg::analysis::{self, PeakResult, PlateauSummary};
use chiralwg::io::{self, PairSeries, RunTable, SiteSeries};
use chiralwg::mft::{self, PdeGrid};
use chiralwg::{oracle, twa};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::spec::{AnalysisStep, ExperimentSpec, PointSpec, Solver};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const EXPONENTS_FILE: &str = "exponents.json";

/// Per-point record written next to the point's CSV files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointManifest {
    pub point: PointSpec,
    pub config_hash: String,
    pub solver: String,
    pub seed: u64,
    pub version: String,
    pub wall_seconds: f64,
    /// Solver diagnostics (clamp counts, jumps, trace drift, ...).
    pub diagnostics: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub spec: ExperimentSpec,
    pub points: Vec<String>,
    pub config_hashes: Vec<String>,
    pub version: String,
    pub wall_seconds: f64,
}

/// Result of one point: its table, diagnostics and extra files.
struct PointOutput {
    table: RunTable,
    diagnostics: Value,
}

fn pde_table(p: &PointSpec, dir: &Path) -> Result<PointOutput, chiralwg::Error> {
    let c = &p.config;
    let g = c.gamma * c.tau;
    let grid = PdeGrid::scaled(p.pde.h, g);
    let t_max = c.gamma * c.t_max;
    let sol = mft::solve_continuum_pde(c.theta0, g, c.n_sites as f64, t_max, grid)?;
    let stride = p.pde.field_stride;
    io::write_float_csv(&dir.join("field.csv"), &["x", "t", "theta", "rate"], sol.field_rows(stride, stride).into_iter().map(|r| r.to_vec()))?;
    let times: Vec<f64> = sol.times().iter().map(|t| t / c.gamma).collect();
    let mut table = RunTable { times, ..Default::default() };
    for n in 1..=c.n_sites {
        let x = n as f64;
        let occupation: Vec<f64> = (0..sol.nt).map(|j| (0.5 * sol.theta(x, sol.t(j))).sin().powi(2)).collect();
        let rate: Vec<f64> = (0..sol.nt).map(|j| c.gamma * sol.rate(x, sol.t(j))).collect();
        let zeros = vec![0.0; sol.nt];
        table.sites.insert(n, SiteSeries { occupation, occupation_stderr: zeros.clone(), rate, rate_stderr: zeros });
    }
    Ok(PointOutput {
        table,
        diagnostics: json!({"nx": sol.nx, "nt": sol.nt, "dx": sol.grid.dx, "dt": sol.grid.dt, "gamma_tau": g}),
    })
}

fn ode_table(p: &PointSpec, dir: &Path) -> Result<PointOutput, chiralwg::Error> {
    let c = &p.config;
    let z_max = (c.n_sites as f64 * c.gamma * c.t_max * (1.0 + 1e-9)).max(1e-3);
    let sg = mft::solve_sine_gordon_ode(c.theta0, z_max)?;
    io::write_float_csv(
        &dir.join("profile.csv"),
        &["z", "u", "du", "profile"],
        sg.nodes().map(|(z, u, d)| vec![z, u, d, -mft_sin(u) * d]),
    )?;
    let dt = c.dt * c.record_every as f64;
    let len = (c.t_max / dt).round() as usize + 1;
    let times: Vec<f64> = (0..len).map(|i| i as f64 * dt).collect();
    let mut table = RunTable { times: times.clone(), ..Default::default() };
    for n in 1..=c.n_sites {
        let nf = n as f64;
        let occupation: Vec<f64> = times.iter().map(|t| (0.5 * sg.u(nf * c.gamma * t)).sin().powi(2)).collect();
        let rate: Vec<f64> = times.iter().map(|t| sg.site_rate(nf, *t, c.gamma)).collect();
        table.sites.insert(n, SiteSeries { occupation, occupation_stderr: vec![0.0; len], rate, rate_stderr: vec![0.0; len] });
    }
    for n in 1..=c.n_sites {
        for m in 1..n {
            // mean field: C(n, m) = (1/4) sin θ_n sin θ_m
            let re: Vec<f64> = times
                .iter()
                .map(|t| 0.25 * mft_sin(sg.u(n as f64 * c.gamma * t)) * mft_sin(sg.u(m as f64 * c.gamma * t)))
                .collect();
            let zeros = vec![0.0; len];
            table.correlators.insert((n, m), PairSeries { re, re_stderr: zeros.clone(), im: zeros.clone(), im_stderr: zeros });
        }
    }
    Ok(PointOutput { table, diagnostics: json!({"z_max": z_max, "z_peak": sg.z_peak()}) })
}

fn mft_sin(u: f64) -> f64 {
    if u > 0.5 * PI { (PI - u).sin() } else { u.sin() }
}

fn asymptotic_output(p: &PointSpec, dir: &Path) -> Result<PointOutput, chiralwg::Error> {
    let c = &p.config;
    let g = c.gamma * c.tau;
    let a = mft::AsymptoticSolution::with_horizon(c.theta0, g, c.gamma * c.t_max)?;
    let dt = c.dt * c.record_every as f64;
    let len = (c.t_max / dt).round() as usize + 1;
    io::write_float_csv(
        &dir.join("asymptotic.csv"),
        &["t", "theta", "rate"],
        (0..len).map(|i| {
            let t = i as f64 * dt;
            vec![t, a.theta(c.gamma * t), c.gamma * a.rate(c.gamma * t)]
        }),
    )?;
    let zeros = a.zero_crossings();
    let measured = (zeros.len() >= 2).then(|| (zeros[zeros.len() - 1] - zeros[0]) / (zeros.len() - 1) as f64 / c.gamma);
    Ok(PointOutput {
        table: RunTable::default(),
        diagnostics: json!({
            "k": a.k,
            "phi0": a.phi0,
            "period": a.period() / c.gamma,
            "burst_period": a.burst_period() / c.gamma,
            "measured_zero_spacing": measured,
            "max_rate": c.gamma * a.max_rate(),
        }),
    })
}

fn solve_point(p: &PointSpec, dir: &Path) -> Result<PointOutput, chiralwg::Error> {
    let c = &p.config;
    Ok(match p.solver {
        Solver::Twa => {
            let run = twa::integrate(c)?;
            let k = run.counters;
            PointOutput {
                table: RunTable::from_grid(&run.grid)?,
                diagnostics: json!({"clamp_events": k.clamp_events, "site_steps": k.site_steps, "n_traj": run.grid.n_traj}),
            }
        }
        Solver::Me => {
            let run = oracle::integrate_master_equation(c)?;
            PointOutput { table: RunTable::from_grid(&run.grid)?, diagnostics: json!({"trace_drift": run.trace_drift}) }
        }
        Solver::Qjump => {
            let run = oracle::trajectory_observables(c)?;
            PointOutput {
                table: RunTable::from_grid(&run.grid)?,
                diagnostics: json!({"jumps": run.counters.jumps, "n_traj": run.grid.n_traj}),
            }
        }
        Solver::MftDiscrete => {
            let run = mft::solve_discrete_mft_with(c, mft::DiscreteMftOptions { include_onsite: p.include_onsite })?;
            PointOutput { table: RunTable::from_grid(&run.grid)?, diagnostics: json!({"bloch_norm_drift": run.norm_drift}) }
        }
        Solver::MftPde => pde_table(p, dir)?,
        Solver::MftOde => ode_table(p, dir)?,
        Solver::Asymptotic => asymptotic_output(p, dir)?,
    })
}

/// Per-point analysis results.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PointSummary {
    pub gamma: f64,
    pub tau: f64,
    pub theta0: f64,
    pub n_sites: usize,
    pub peaks: Option<Vec<PeakResult>>,
    pub plateau: Option<PlateauSummary>,
    pub correlations: Option<Vec<Value>>,
    pub photon_balance: Option<analysis::PhotonBalance>,
    pub errors: Vec<String>,
}

/// Analysis steps operating on one table.
pub fn analyze_table(table: &RunTable, config: &chiralwg::model::SimulationConfig, spec: &ExperimentSpec, dir: &Path) -> anyhow::Result<PointSummary> {
    let steps = &spec.analysis;
    let mut s = PointSummary { gamma: config.gamma, tau: config.tau, theta0: config.theta0, n_sites: config.n_sites, ..Default::default() };
    let wants = |x: AnalysisStep| steps.contains(&x);
    let needs_peaks = wants(AnalysisStep::Peaks) || wants(AnalysisStep::Plateau) || wants(AnalysisStep::Correlations)
        || wants(AnalysisStep::PowerLaw) || wants(AnalysisStep::LogCorrected);
    if table.sites.is_empty() {
        return Ok(s);
    }
    if needs_peaks {
        let mut peaks = Vec::new();
        for (&n, series) in &table.sites {
            match analysis::find_peak(&table.times, &series.rate, n, spec.smoothing) {
                Ok(p) => peaks.push(p),
                Err(e) => s.errors.push(e.to_string()),
            }
        }
        s.peaks = Some(peaks);
    }
    let mut xi = Vec::new();
    if wants(AnalysisStep::Correlations) {
        let mut fits = Vec::new();
        let dt = table.dt();
        for p in s.peaks.iter().flatten() {
            let i = ((p.t_pk / dt).round() as usize).min(table.times.len() - 1);
            let Some([j, c, se]) = table.correlation_profile(p.site, i) else { continue };
            let se = se.iter().any(|v| *v > 0.0).then_some(se);
            match analysis::fit_correlations(&j, &c, se.as_deref(), spec.correlation_model) {
                Ok(f) => {
                    xi.push(f.length);
                    fits.push(json!({"site": p.site, "fit": f}));
                }
                Err(e) => fits.push(json!({"site": p.site, "error": e.to_string()})),
            }
        }
        s.correlations = Some(fits);
    }
    if let Some(peaks) = &s.peaks {
        // the plateau is taken over the contiguous run of sites with a burst that ends at the last site
        let last = table.n_sites();
        let mut start = peaks.len();
        while start > 0 && peaks[start - 1].site == last - (peaks.len() - start) {
            start -= 1;
        }
        let run = &peaks[start..];
        if !run.is_empty() {
            let xi_ref = (xi.len() == peaks.len()).then(|| &xi[start..]);
            s.plateau = Some(analysis::plateau::summarize(run, xi_ref, spec.plateau_tolerance, spec.plateau_window));
        }
    }
    if wants(AnalysisStep::Intensity) || wants(AnalysisStep::PhotonBalance) {
        let rates: Vec<Vec<f64>> = table.sites.values().map(|v| v.rate.clone()).collect();
        let k = if config.tau > 0.0 { (config.tau / table.dt()).round() as usize } else { 0 };
        let intensity = analysis::field_intensity(&rates, k, config.tau)?;
        if wants(AnalysisStep::Intensity) {
            io::write_float_csv(
                &dir.join("intensity.csv"),
                &["t", "intensity"],
                table.times.iter().zip(&intensity).map(|(t, i)| vec![*t, *i]),
            )?;
        }
        if wants(AnalysisStep::PhotonBalance) {
            let v = if config.tau > 0.0 { 1.0 / config.tau } else { 1.0 };
            let emitted = v * intensity.windows(2).map(|w| 0.5 * (w[0] + w[1]) * table.dt()).sum::<f64>();
            let loss: f64 = table.sites.values().map(|v| v.occupation[0] - v.occupation[v.occupation.len() - 1]).sum();
            s.photon_balance =
                Some(analysis::PhotonBalance { emitted, excitation_loss: loss, relative_error: (emitted - loss).abs() / loss.abs() });
        }
    }
    Ok(s)
}

/// Fits across sweep points of the plateau quantities against `Γτ`.
pub fn sweep_fits(summaries: &[PointSummary], steps: &[AnalysisStep]) -> Value {
    let mut out = serde_json::Map::new();
    let plateaued = |pick: fn(&PlateauSummary) -> Option<&analysis::PlateauResult>| -> (Vec<f64>, Vec<f64>) {
        summaries
            .iter()
            .filter(|s| s.tau > 0.0)
            .filter_map(|s| {
                let p = pick(s.plateau.as_ref()?)?;
                p.plateaued.then_some((s.gamma * s.tau, p.value))
            })
            .unzip()
    };
    if steps.contains(&AnalysisStep::PowerLaw) {
        for (name, pick) in [
            ("r_eff", (|p: &PlateauSummary| Some(&p.r_eff)) as fn(&PlateauSummary) -> Option<&analysis::PlateauResult>),
            ("t_eff", |p: &PlateauSummary| Some(&p.t_eff)),
            ("xi_eff", |p: &PlateauSummary| p.xi_eff.as_ref()),
        ] {
            let (x, y) = plateaued(pick);
            if x.is_empty() {
                continue;
            }
            let entry = match analysis::fit_power_law(&x, &y) {
                Ok(f) => json!({"gamma_tau": x, "values": y, "fit": f}),
                Err(e) => json!({"gamma_tau": x, "values": y, "error": e.to_string()}),
            };
            out.insert(name.to_string(), entry);
        }
    }
    if steps.contains(&AnalysisStep::LogCorrected) {
        let (x, y) = plateaued(|p| Some(&p.t_eff));
        let g = summaries.first().map_or(1.0, |s| s.gamma);
        let taus: Vec<f64> = x.iter().map(|gt| gt / g).collect();
        let entry = match analysis::fit_log_corrected(&taus, &y, g) {
            Ok(f) => json!({"tau": taus, "t_eff": y, "fit": f}),
            Err(e) => json!({"tau": taus, "t_eff": y, "error": e.to_string()}),
        };
        out.insert("t_eff_log_corrected".to_string(), entry);
    }
    Value::Object(out)
}

/// Run every sweep point (in parallel), write point outputs and the run manifest.
pub fn run(spec: &ExperimentSpec) -> anyhow::Result<PathBuf> {
    let points = spec.validate()?;
    let root = spec.output_dir.clone();
    fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
    let start = Instant::now();
    let results: Vec<anyhow::Result<(PointManifest, PointSummary)>> = points
        .par_iter()
        .map(|p| {
            let dir = root.join(p.dir_name());
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let t0 = Instant::now();
            let out = solve_point(p, &dir).map_err(anyhow::Error::from).with_context(|| format!("{} point {}", p.solver.tag(), p.index))?;
            let wall_seconds = t0.elapsed().as_secs_f64();
            if !out.table.sites.is_empty() {
                if p.config.normalized_output {
                    let mut scaled = out.table.clone();
                    scaled.times.iter_mut().for_each(|t| *t *= p.config.gamma);
                    scaled.write_csv(&dir)?;
                } else {
                    out.table.write_csv(&dir)?;
                }
            }
            let manifest = PointManifest {
                config_hash: p.config_hash(),
                solver: p.solver.tag().to_string(),
                seed: p.config.seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_seconds,
                diagnostics: out.diagnostics,
                point: p.clone(),
            };
            io::write_json(&dir.join(MANIFEST_FILE), &manifest)?;
            let summary = analyze_table(&out.table, &p.config, spec, &dir)?;
            if !spec.analysis.is_empty() {
                io::write_json(&dir.join(SUMMARY_FILE), &summary)?;
            }
            Ok((manifest, summary))
        })
        .collect();
    let mut manifests = Vec::new();
    let mut summaries = Vec::new();
    for r in results {
        let (m, s) = r?;
        manifests.push(m);
        summaries.push(s);
    }
    if spec.analysis.iter().any(|s| matches!(s, AnalysisStep::PowerLaw | AnalysisStep::LogCorrected)) {
        io::write_json(&root.join(EXPONENTS_FILE), &sweep_fits(&summaries, &spec.analysis))?;
    }
    let manifest = RunManifest {
        spec: spec.clone(),
        points: points.iter().map(PointSpec::dir_name).collect(),
        config_hashes: manifests.iter().map(|m| m.config_hash.clone()).collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    io::write_json(&root.join(MANIFEST_FILE), &manifest)?;
    Ok(root)
}
