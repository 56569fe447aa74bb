use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use chiralwg::analysis::{CorrelationModel, Smoothing};
use chiralwg::model::{NoisePrefactor, SimulationConfig};
use chiralwg_cli::spec::{parse_angle, AnalysisStep, ExperimentSpec, Solver};
use chiralwg_cli::{analyze, bench, compare, exit_code, run, EXIT_TOLERANCE};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "chiralwg", version, about = "Cascaded emitters in a chiral waveguide with delay")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "CHIRALWG_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver over a sweep and write per-point outputs.
    Run(Box<RunArgs>),
    /// Compare the observables of two point directories.
    Compare(CompareArgs),
    /// Recompute summaries of a finished run.
    Analyze(AnalyzeArgs),
    /// Measure phase-space solver throughput.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum NoiseArg {
    Gamma,
    SqrtGamma,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModelArg {
    Gaussian,
    GaussianWithOffset,
    Kww,
}

#[derive(Args, Default)]
struct ConfigArgs {
    #[arg(long)]
    n_sites: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Initial polar angle, e.g. `pi`, `0.7pi`, `pi/2`, `2.2`.
    #[arg(long, value_parser = parse_angle)]
    theta0: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    noise_prefactor: Option<NoiseArg>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    allow_coarse_dt: bool,
    #[arg(long)]
    normalized_output: bool,
}

impl ConfigArgs {
    fn apply(&self, c: &mut SimulationConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(n_sites, gamma, tau, theta0, dt, t_max, n_traj, seed, record_every);
        if let Some(p) = self.noise_prefactor {
            c.noise_prefactor = match p {
                NoiseArg::Gamma => NoisePrefactor::GammaTimesDw,
                NoiseArg::SqrtGamma => NoisePrefactor::SqrtGammaTimesDw,
            };
        }
        c.allow_coarse_dt |= self.allow_coarse_dt;
        c.normalized_output |= self.normalized_output;
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<Solver>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated delays to sweep.
    #[arg(long, value_delimiter = ',')]
    sweep_tau: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_angle)]
    sweep_theta0: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    sweep_n_sites: Vec<usize>,
    /// Comma-separated analysis steps.
    #[arg(long, value_delimiter = ',', value_enum)]
    analysis: Vec<AnalysisStep>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    pde_h: Option<f64>,
    #[arg(long)]
    pde_field_stride: Option<usize>,
    /// Drop the independent-decay terms of the discrete mean field.
    #[arg(long)]
    no_onsite: bool,
    /// `off`, `auto` or an odd window width in samples.
    #[arg(long, value_parser = parse_smoothing)]
    smoothing: Option<Smoothing>,
    #[arg(long)]
    plateau_tolerance: Option<f64>,
    #[arg(long)]
    plateau_window: Option<usize>,
    #[arg(long, value_enum)]
    correlation_model: Option<ModelArg>,
}

fn parse_smoothing(s: &str) -> Result<Smoothing, String> {
    match s {
        "off" => Ok(Smoothing::Off),
        "auto" => Ok(Smoothing::Auto),
        w => w.parse().map(Smoothing::Window).map_err(|_| format!("smoothing {s:?}: expected off, auto or a width")),
    }
}

impl RunArgs {
    fn spec(&self) -> anyhow::Result<ExperimentSpec> {
        let mut spec = match &self.spec {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentSpec::default(),
        };
        if let Some(s) = self.solver {
            spec.solver = s;
        }
        self.config.apply(&mut spec.config);
        if self.config.seed.is_some() {
            spec.seed = self.config.seed;
        }
        if !self.sweep_tau.is_empty() {
            spec.sweep.tau = self.sweep_tau.clone();
        }
        if !self.sweep_theta0.is_empty() {
            spec.sweep.theta0 = self.sweep_theta0.clone();
        }
        if !self.sweep_n_sites.is_empty() {
            spec.sweep.n_sites = self.sweep_n_sites.clone();
        }
        if !self.analysis.is_empty() {
            spec.analysis = self.analysis.clone();
        }
        if let Some(d) = &self.output_dir {
            spec.output_dir = d.clone();
        }
        if let Some(h) = self.pde_h {
            spec.pde.h = h;
        }
        if let Some(s) = self.pde_field_stride {
            spec.pde.field_stride = s;
        }
        if self.no_onsite {
            spec.include_onsite = false;
        }
        if let Some(s) = self.smoothing {
            spec.smoothing = s;
        }
        if let Some(t) = self.plateau_tolerance {
            spec.plateau_tolerance = t;
        }
        if self.plateau_window.is_some() {
            spec.plateau_window = self.plateau_window;
        }
        if let Some(m) = self.correlation_model {
            spec.correlation_model = match m {
                ModelArg::Gaussian => CorrelationModel::Gaussian,
                ModelArg::GaussianWithOffset => CorrelationModel::GaussianWithOffset,
                ModelArg::Kww => CorrelationModel::Kww,
            };
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct CompareArgs {
    run_a: PathBuf,
    run_b: PathBuf,
    /// Largest accepted σ-normalized deviation.
    #[arg(long)]
    max_sigma: Option<f64>,
    /// Largest accepted L∞ difference relative to the first run's maximum.
    #[arg(long)]
    max_rel_linf: Option<f64>,
    /// Write the full report here as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    run_dir: PathBuf,
    #[arg(long, value_delimiter = ',', value_enum)]
    analysis: Vec<AnalysisStep>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let spec = args.spec()?;
            let dir = run::run(&spec)?;
            println!("{}", dir.display());
        }
        Command::Compare(args) => {
            let c = compare::compare_dirs(&args.run_a, &args.run_b)?;
            if let Some(p) = &args.report {
                chiralwg::io::write_json(p, &c)?;
            }
            for s in &c.series {
                let sigma = s.max_sigma.map_or("-".to_string(), |v| format!("{v:.3}"));
                println!("site {:>3} {:<10} linf {:.3e} l2 {:.3e} rel {:.3e} sigma {sigma}", s.site, s.observable, s.linf, s.l2, s.rel_linf);
            }
            let ok = c.passes(args.max_rel_linf, args.max_sigma);
            println!("{}", if ok { "PASS" } else { "FAIL" });
            if !ok {
                return Ok(EXIT_TOLERANCE);
            }
        }
        Command::Analyze(args) => {
            let steps = (!args.analysis.is_empty()).then_some(args.analysis);
            let summaries = analyze::analyze_run(&args.run_dir, steps)?;
            println!("analyzed {} points", summaries.len());
        }
        Command::Bench(args) => {
            let mut c = SimulationConfig { n_sites: 16, n_traj: 256, t_max: 1.0, ..Default::default() };
            args.config.apply(&mut c);
            let r = bench::bench_twa(&c)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
