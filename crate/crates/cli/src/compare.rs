//! Pointwise comparison of two runs' observables on a shared time grid.

use std::path::Path;

use anyhow::{bail, Context};
use chiralwg::io::RunTable;
use serde::Serialize;

#[derive(Clone, Debug, Default, Serialize)]
pub struct SeriesDiff {
    pub site: usize,
    pub observable: &'static str,
    pub linf: f64,
    pub l2: f64,
    /// `linf / max |reference|`.
    pub rel_linf: f64,
    /// Largest `|a - b| / sqrt(σ_a² + σ_b²)` over samples with a nonzero combined error.
    pub max_sigma: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub samples: usize,
    pub stride_a: usize,
    pub stride_b: usize,
    pub series: Vec<SeriesDiff>,
    pub worst_rel_linf: f64,
    pub worst_sigma: Option<f64>,
}

impl Comparison {
    pub fn passes(&self, max_rel_linf: Option<f64>, max_sigma: Option<f64>) -> bool {
        let rel_ok = max_rel_linf.is_none_or(|m| self.worst_rel_linf <= m);
        let sig_ok = match (max_sigma, self.worst_sigma) {
            (Some(m), Some(s)) => s <= m,
            _ => true,
        };
        rel_ok && sig_ok
    }
}

/// Strides mapping both time grids onto the coarser one.
fn strides(a: &RunTable, b: &RunTable) -> anyhow::Result<(usize, usize)> {
    let (da, db) = (a.dt(), b.dt());
    if da == 0.0 || db == 0.0 {
        return Ok((1, 1));
    }
    let (ratio, a_finer) = if da <= db { (db / da, true) } else { (da / db, false) };
    let r = ratio.round();
    if (ratio - r).abs() > 1e-6 * r {
        bail!("sample spacings {da} and {db} are not integer multiples");
    }
    Ok(if a_finer { (r as usize, 1) } else { (1, r as usize) })
}

fn diff(site: usize, observable: &'static str, a: (&[f64], &[f64]), b: (&[f64], &[f64]), sa: usize, sb: usize, len: usize) -> SeriesDiff {
    let mut d = SeriesDiff { site, observable, ..Default::default() };
    let mut sum2 = 0.0;
    let mut scale = 0.0f64;
    for i in 0..len {
        let (x, y) = (a.0[i * sa], b.0[i * sb]);
        let e = (x - y).abs();
        d.linf = d.linf.max(e);
        sum2 += e * e;
        scale = scale.max(x.abs());
        let s = (a.1[i * sa].powi(2) + b.1[i * sb].powi(2)).sqrt();
        if s > 0.0 {
            let z = e / s;
            d.max_sigma = Some(d.max_sigma.map_or(z, |m: f64| m.max(z)));
        }
    }
    d.l2 = (sum2 / len.max(1) as f64).sqrt();
    d.rel_linf = if scale > 0.0 { d.linf / scale } else { d.linf };
    d
}

pub fn compare_tables(a: &RunTable, b: &RunTable) -> anyhow::Result<Comparison> {
    let (sa, sb) = strides(a, b)?;
    let len = ((a.times.len() + sa - 1) / sa).min((b.times.len() + sb - 1) / sb);
    let mut series = Vec::new();
    for (&n, x) in &a.sites {
        let Some(y) = b.sites.get(&n) else { continue };
        series.push(diff(n, "occupation", (&x.occupation, &x.occupation_stderr), (&y.occupation, &y.occupation_stderr), sa, sb, len));
        series.push(diff(n, "rate", (&x.rate, &x.rate_stderr), (&y.rate, &y.rate_stderr), sa, sb, len));
    }
    if series.is_empty() {
        bail!("the runs share no sites");
    }
    let worst_rel_linf = series.iter().map(|s| s.rel_linf).fold(0.0, f64::max);
    let worst_sigma = series.iter().filter_map(|s| s.max_sigma).reduce(f64::max);
    Ok(Comparison { samples: len, stride_a: sa, stride_b: sb, series, worst_rel_linf, worst_sigma })
}

pub fn compare_dirs(a: &Path, b: &Path) -> anyhow::Result<Comparison> {
    let ta = RunTable::read_csv(a).with_context(|| format!("reading {}", a.display()))?;
    let tb = RunTable::read_csv(b).with_context(|| format!("reading {}", b.display()))?;
    compare_tables(&ta, &tb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chiralwg::io::SiteSeries;

    fn table(dt: f64, len: usize, f: impl Fn(f64) -> f64) -> RunTable {
        let times: Vec<f64> = (0..len).map(|i| i as f64 * dt).collect();
        let v: Vec<f64> = times.iter().map(|t| f(*t)).collect();
        let mut t = RunTable { times, ..Default::default() };
        t.sites.insert(1, SiteSeries { occupation: v.clone(), occupation_stderr: vec![0.0; len], rate: v, rate_stderr: vec![0.0; len] });
        t
    }

    #[test]
    fn subsamples_finer_grid() {
        let a = table(0.01, 301, |t| (-t).exp());
        let b = table(0.04, 76, |t| (-t).exp());
        let c = compare_tables(&a, &b).unwrap();
        assert_eq!((c.stride_a, c.stride_b, c.samples), (4, 1, 76));
        assert!(c.worst_rel_linf < 1e-15);
    }

    #[test]
    fn non_commensurate_grids_rejected() {
        assert!(compare_tables(&table(0.01, 10, |t| t), &table(0.015, 10, |t| t)).is_err());
    }
}
