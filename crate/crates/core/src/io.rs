//! Physical-frame tables and their CSV / JSON serialization.
//!
//! `observables.csv`: `t, site, occupation, occupation_stderr, rate, rate_stderr`,
//! rows ordered by site, then time. `correlators.csv`: `t, site, j, re_corr,
//! re_corr_stderr, im_corr, im_corr_stderr` for `C(site, site - j, t)`. Floats are
//! written with 17 significant digits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::grid::ObservableGrid;
use crate::model::FrameError;

pub const OBSERVABLES_FILE: &str = "observables.csv";
pub const CORRELATORS_FILE: &str = "correlators.csv";
const OBSERVABLE_HEADER: [&str; 6] = ["t", "site", "occupation", "occupation_stderr", "rate", "rate_stderr"];
const CORRELATOR_HEADER: [&str; 7] = ["t", "site", "j", "re_corr", "re_corr_stderr", "im_corr", "im_corr_stderr"];

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("schema: {0}")]
    Schema(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SiteSeries {
    pub occupation: Vec<f64>,
    pub occupation_stderr: Vec<f64>,
    pub rate: Vec<f64>,
    pub rate_stderr: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairSeries {
    pub re: Vec<f64>,
    pub re_stderr: Vec<f64>,
    pub im: Vec<f64>,
    pub im_stderr: Vec<f64>,
}

/// Per-site series on a common physical time grid; correlators keyed by `(n, m)`, `m < n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTable {
    pub times: Vec<f64>,
    pub sites: BTreeMap<usize, SiteSeries>,
    pub correlators: BTreeMap<(usize, usize), PairSeries>,
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl RunTable {
    pub fn from_grid(grid: &ObservableGrid) -> Result<Self, FrameError> {
        let mut table = RunTable { times: grid.physical_times(), ..Default::default() };
        for n in grid.sites() {
            let occ = grid.occupation_physical(n)?;
            let rate = grid.emission_rate(n, None)?;
            table.sites.insert(
                n,
                SiteSeries { occupation: occ.mean, occupation_stderr: occ.stderr, rate: rate.rate, rate_stderr: rate.stderr },
            );
        }
        for &(n, m) in grid.correlators.keys() {
            if let Some(c) = grid.correlator_physical(n, m)? {
                table
                    .correlators
                    .insert((n, m), PairSeries { re: c.re.mean, re_stderr: c.re.stderr, im: c.im.mean, im_stderr: c.im.stderr });
            }
        }
        Ok(table)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.keys().next_back().copied().unwrap_or(0)
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }

    pub fn write_csv(&self, dir: &Path) -> Result<(), IoError> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(OBSERVABLES_FILE))?));
        w.write_record(OBSERVABLE_HEADER)?;
        for (n, s) in &self.sites {
            for (i, t) in self.times.iter().enumerate() {
                w.write_record([
                    fmt_float(*t),
                    n.to_string(),
                    fmt_float(s.occupation[i]),
                    fmt_float(s.occupation_stderr[i]),
                    fmt_float(s.rate[i]),
                    fmt_float(s.rate_stderr[i]),
                ])?;
            }
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(CORRELATORS_FILE))?));
        w.write_record(CORRELATOR_HEADER)?;
        for ((n, m), c) in &self.correlators {
            for (i, t) in self.times.iter().enumerate() {
                w.write_record([
                    fmt_float(*t),
                    n.to_string(),
                    (n - m).to_string(),
                    fmt_float(c.re[i]),
                    fmt_float(c.re_stderr[i]),
                    fmt_float(c.im[i]),
                    fmt_float(c.im_stderr[i]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(dir: &Path) -> Result<Self, IoError> {
        let mut table = RunTable::default();
        let mut r = csv::Reader::from_path(dir.join(OBSERVABLES_FILE))?;
        check_header(r.headers()?, &OBSERVABLE_HEADER)?;
        let mut first_site = None;
        for rec in r.records() {
            let rec = rec?;
            let t = parse_f64(&rec[0])?;
            let n = parse_usize(&rec[1])?;
            if *first_site.get_or_insert(n) == n {
                table.times.push(t);
            }
            let s = table.sites.entry(n).or_default();
            s.occupation.push(parse_f64(&rec[2])?);
            s.occupation_stderr.push(parse_f64(&rec[3])?);
            s.rate.push(parse_f64(&rec[4])?);
            s.rate_stderr.push(parse_f64(&rec[5])?);
        }
        if table.sites.values().any(|s| s.rate.len() != table.times.len()) {
            return Err(IoError::Schema("sites have unequal series lengths".into()));
        }
        let path = dir.join(CORRELATORS_FILE);
        if path.exists() {
            let mut r = csv::Reader::from_path(path)?;
            check_header(r.headers()?, &CORRELATOR_HEADER)?;
            for rec in r.records() {
                let rec = rec?;
                let n = parse_usize(&rec[1])?;
                let j = parse_usize(&rec[2])?;
                if j == 0 || j >= n {
                    return Err(IoError::Schema(format!("correlator distance {j} at site {n}")));
                }
                let c = table.correlators.entry((n, n - j)).or_default();
                c.re.push(parse_f64(&rec[3])?);
                c.re_stderr.push(parse_f64(&rec[4])?);
                c.im.push(parse_f64(&rec[5])?);
                c.im_stderr.push(parse_f64(&rec[6])?);
            }
        }
        Ok(table)
    }

    /// `(j, Re C(n, n - j, t_i), stderr)` for every recorded upstream partner.
    pub fn correlation_profile(&self, n: usize, i: usize) -> Option<[Vec<f64>; 3]> {
        let (mut j, mut c, mut se) = (Vec::new(), Vec::new(), Vec::new());
        for m in (1..n).rev() {
            let p = self.correlators.get(&(n, m))?;
            j.push((n - m) as f64);
            c.push(*p.re.get(i)?);
            se.push(*p.re_stderr.get(i)?);
        }
        Some([j, c, se])
    }
}

fn check_header(found: &csv::StringRecord, want: &[&str]) -> Result<(), IoError> {
    if found.iter().ne(want.iter().copied()) {
        return Err(IoError::Schema(format!("header {:?}, expected {want:?}", found.iter().collect::<Vec<_>>())));
    }
    Ok(())
}

fn parse_f64(s: &str) -> Result<f64, IoError> {
    s.trim().parse().map_err(|_| IoError::Schema(format!("not a number: {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize, IoError> {
    s.trim().parse().map_err(|_| IoError::Schema(format!("not an index: {s:?}")))
}

/// Write rows of floats under `header`.
pub fn write_float_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt_float))?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with keys in sorted order.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    // serde_json's map is ordered by key, so a round trip through Value sorts every object
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(to_sorted_json(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
