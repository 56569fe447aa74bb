//! Re-run the analysis steps on the outputs of a finished sweep.

use std::path::Path;

use anyhow::Context;
use chiralwg::io::{self, RunTable};

use crate::run::{analyze_table, sweep_fits, PointManifest, PointSummary, RunManifest, EXPONENTS_FILE, MANIFEST_FILE, SUMMARY_FILE};
use crate::spec::AnalysisStep;

/// Analyze every point of the run in `dir`; `steps` overrides the recorded analysis list.
pub fn analyze_run(dir: &Path, steps: Option<Vec<AnalysisStep>>) -> anyhow::Result<Vec<PointSummary>> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).with_context(|| format!("reading {}", dir.display()))?;
    let manifest: RunManifest = serde_json::from_str(&text).context("parsing run manifest")?;
    let mut spec = manifest.spec;
    if let Some(steps) = steps {
        spec.analysis = steps;
    }
    let mut summaries = Vec::new();
    for name in &manifest.points {
        let pdir = dir.join(name);
        let point: PointManifest = serde_json::from_str(&std::fs::read_to_string(pdir.join(MANIFEST_FILE))?)
            .with_context(|| format!("parsing {name}/{MANIFEST_FILE}"))?;
        let mut config = point.point.config;
        let table = if pdir.join(io::OBSERVABLES_FILE).exists() {
            let mut t = RunTable::read_csv(&pdir)?;
            if config.normalized_output {
                t.times.iter_mut().for_each(|x| *x /= config.gamma);
            }
            t
        } else {
            RunTable::default()
        };
        config.normalized_output = false;
        let summary = analyze_table(&table, &config, &spec, &pdir)?;
        io::write_json(&pdir.join(SUMMARY_FILE), &summary)?;
        summaries.push(summary);
    }
    io::write_json(&dir.join(EXPONENTS_FILE), &sweep_fits(&summaries, &spec.analysis))?;
    Ok(summaries)
}
