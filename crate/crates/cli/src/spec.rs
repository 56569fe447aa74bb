//! Experiment description: solver, base configuration, sweep axes and analysis steps.

use std::f64::consts::PI;
use std::path::PathBuf;

use chiralwg::analysis::{CorrelationModel, Smoothing, DEFAULT_PLATEAU_TOLERANCE};
use chiralwg::model::SimulationConfig;
use chiralwg::oracle::{MAX_ME_SITES, MAX_QJUMP_SITES};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Solver {
    Twa,
    Me,
    Qjump,
    MftPde,
    MftOde,
    MftDiscrete,
    Asymptotic,
}

impl Solver {
    pub fn tag(self) -> &'static str {
        match self {
            Solver::Twa => "twa",
            Solver::Me => "me",
            Solver::Qjump => "qjump",
            Solver::MftPde => "mft_pde",
            Solver::MftOde => "mft_ode",
            Solver::MftDiscrete => "mft_discrete",
            Solver::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AnalysisStep {
    /// Per-site peak rate and time.
    Peaks,
    /// Plateaus of the per-site peaks over the chain.
    Plateau,
    /// Correlation-profile fit at each site's peak time.
    Correlations,
    /// Power laws of the plateau values against the delay, across sweep points.
    PowerLaw,
    /// Log-corrected fit of the plateau peak time against the delay.
    LogCorrected,
    /// Field intensity after the last site.
    Intensity,
    /// Photon number after the last site against the lost excitations.
    PhotonBalance,
}

/// Lists of values overriding the base configuration; empty means "base value only".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub tau: Vec<f64>,
    pub theta0: Vec<f64>,
    pub n_sites: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSpec {
    /// Node spacing in the delay-free variables `x √(Γτ)`, `Γt / √(Γτ)`.
    pub h: f64,
    /// Sites (and field rows) are dumped every `field_stride` nodes in each direction.
    pub field_stride: usize,
}

impl Default for PdeSpec {
    fn default() -> Self {
        Self { h: 0.02, field_stride: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub solver: Solver,
    pub config: SimulationConfig,
    pub sweep: Sweep,
    pub analysis: Vec<AnalysisStep>,
    pub output_dir: PathBuf,
    /// Overrides `config.seed` when set.
    pub seed: Option<u64>,
    pub pde: PdeSpec,
    /// Keep the independent-decay terms in the discrete mean field.
    pub include_onsite: bool,
    pub smoothing: Smoothing,
    pub plateau_tolerance: f64,
    pub plateau_window: Option<usize>,
    pub correlation_model: CorrelationModel,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            solver: Solver::Me,
            config: SimulationConfig::default(),
            sweep: Sweep::default(),
            analysis: Vec::new(),
            output_dir: PathBuf::from("runs"),
            seed: None,
            pde: PdeSpec::default(),
            include_onsite: true,
            smoothing: Smoothing::Off,
            plateau_tolerance: DEFAULT_PLATEAU_TOLERANCE,
            plateau_window: None,
            correlation_model: CorrelationModel::Kww,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("invalid configuration at sweep point {index}")]
    Config {
        index: usize,
        #[source]
        source: chiralwg::model::ConfigError,
    },
    #[error("{solver} supports at most {max} sites, sweep point {index} has {n_sites}")]
    Guard { solver: &'static str, index: usize, n_sites: usize, max: usize },
    #[error("{0}")]
    Invalid(String),
}

/// One sweep point: the configuration a single solver run receives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub index: usize,
    pub solver: Solver,
    pub config: SimulationConfig,
    pub pde: PdeSpec,
    pub include_onsite: bool,
}

impl PointSpec {
    pub fn dir_name(&self) -> String {
        format!("point_{:04}", self.index)
    }

    /// SHA-256 over the sorted-key JSON of everything that determines the outputs.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.index = 0;
        let json = chiralwg::io::to_sorted_json(&canonical).expect("point spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

impl ExperimentSpec {
    /// Cartesian product `n_sites × tau × theta0` in that nesting order.
    pub fn points(&self) -> Vec<PointSpec> {
        let mut base = self.config.clone();
        if let Some(seed) = self.seed {
            base.seed = seed;
        }
        let or_base = |v: &[f64], b: f64| if v.is_empty() { vec![b] } else { v.to_vec() };
        let sizes = if self.sweep.n_sites.is_empty() { vec![base.n_sites] } else { self.sweep.n_sites.clone() };
        let mut out = Vec::new();
        for &n_sites in &sizes {
            for tau in or_base(&self.sweep.tau, base.tau) {
                for theta0 in or_base(&self.sweep.theta0, base.theta0) {
                    out.push(PointSpec {
                        index: out.len(),
                        solver: self.solver,
                        config: SimulationConfig { n_sites, tau, theta0, ..base.clone() },
                        pde: self.pde.clone(),
                        include_onsite: self.include_onsite,
                    });
                }
            }
        }
        out
    }

    /// Validate every point before any solver starts.
    pub fn validate(&self) -> Result<Vec<PointSpec>, SpecError> {
        if !(self.plateau_tolerance > 0.0) {
            return Err(SpecError::Invalid(format!("plateau_tolerance = {}", self.plateau_tolerance)));
        }
        if !(self.pde.h > 0.0) || self.pde.field_stride == 0 {
            return Err(SpecError::Invalid(format!("pde settings {:?}", self.pde)));
        }
        let points = self.points();
        for p in &points {
            p.config.validate().map_err(|source| SpecError::Config { index: p.index, source })?;
            let limit = match self.solver {
                Solver::Me => Some(("me", MAX_ME_SITES)),
                Solver::Qjump => Some(("qjump", MAX_QJUMP_SITES)),
                _ => None,
            };
            if let Some((solver, max)) = limit {
                if p.config.n_sites > max {
                    return Err(SpecError::Guard { solver, index: p.index, n_sites: p.config.n_sites, max });
                }
            }
            let c = &p.config;
            if matches!(self.solver, Solver::MftOde | Solver::Asymptotic) && c.theta0 >= PI {
                return Err(SpecError::Invalid(format!("point {}: theta0 = pi is adynamical in mean field", p.index)));
            }
            if self.solver == Solver::Asymptotic && c.tau == 0.0 {
                return Err(SpecError::Invalid(format!("point {}: the pendulum limit needs tau > 0", p.index)));
            }
            if self.solver == Solver::MftOde && c.tau != 0.0 {
                return Err(SpecError::Invalid(format!("point {}: the self-similar reduction needs tau = 0", p.index)));
            }
        }
        Ok(points)
    }
}

/// Parse an angle such as `3.14`, `pi`, `0.7pi` or `pi/2`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    if let Some(rest) = t.strip_prefix("pi/") {
        return rest.parse::<f64>().map(|d| PI / d).map_err(|e| format!("{s}: {e}"));
    }
    if let Some(coef) = t.strip_suffix("pi") {
        let coef = coef.trim_end_matches('*');
        let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|e| format!("{s}: {e}"))? };
        return Ok(c * PI);
    }
    t.parse::<f64>().map_err(|e| format!("{s}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert!((parse_angle("0.7pi").unwrap() - 0.7 * PI).abs() < 1e-15);
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle("1.5").unwrap(), 1.5);
        assert!(parse_angle("x").is_err());
    }

    #[test]
    fn sweep_nesting_and_hash() {
        let spec = ExperimentSpec {
            sweep: Sweep { tau: vec![0.0, 0.01], theta0: vec![1.0, 2.0, 3.0], n_sites: vec![2, 3] },
            ..Default::default()
        };
        let pts = spec.points();
        assert_eq!(pts.len(), 12);
        assert_eq!((pts[5].config.n_sites, pts[5].config.tau, pts[5].config.theta0), (2, 0.01, 3.0));
        let mut moved = pts[5].clone();
        moved.index = 99;
        assert_eq!(moved.config_hash(), pts[5].config_hash());
        assert_ne!(pts[4].config_hash(), pts[5].config_hash());
    }

    #[test]
    fn guards() {
        let spec = ExperimentSpec { config: SimulationConfig { n_sites: 7, ..Default::default() }, ..Default::default() };
        assert!(matches!(spec.validate(), Err(SpecError::Guard { max: 6, .. })));
        let spec = ExperimentSpec {
            solver: Solver::Qjump,
            config: SimulationConfig { n_sites: 7, ..Default::default() },
            ..Default::default()
        };
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ExperimentSpec { analysis: vec![AnalysisStep::Peaks, AnalysisStep::Plateau], ..Default::default() };
        let s = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let partial: ExperimentSpec = serde_json::from_str(r#"{"solver": "twa", "config": {"n_sites": 4}}"#).unwrap();
        assert_eq!(partial.config.n_sites, 4);
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"solvr": "twa"}"#).is_err());
    }
}
