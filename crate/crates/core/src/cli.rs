//! Command-line front end: phase sweeps to CSV, the validation suites, and
//! the shot-level Monte Carlo calibration.
//!
//! Option precedence is flags over config file over built-in defaults.  The
//! config file is flat `key = value` text whose keys are exactly the long
//! option names; unknown keys are rejected.  All phases are radians.
//!
//! Exit codes: 0 on success, 1 when a validation suite fails, 2 for any
//! configuration or usage problem.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analytic::{
    mu_expectation, mu_sensitivity_sq, noon_expectation, noon_sensitivity_sq, nu_expectation,
    nu_sensitivity_sq, ReferenceCurves,
};
use crate::fock::SourceParams;
use crate::math::linspace;
use crate::montecarlo::empirical_sensitivity;
use crate::observables::{
    expectation, measure_with, scheme_state, DetectionScheme, MeasureOptions, DEFAULT_FD_STEP,
    DEFAULT_TAIL_TOL,
};
use crate::optics::CONVENTION;
use crate::validation::{run_identity_suite, run_oracle_suite, SuiteReport};

const DEFAULT_NBAR: f64 = 100.0;
const DEFAULT_POINTS: usize = 629;
const DEFAULT_SEED: u64 = 7;
const DEFAULT_MC_PHI: f64 = 0.02;
const DEFAULT_MC_SHOTS: u64 = 10_000;
const DEFAULT_MC_TRIALS: u64 = 200;

#[derive(Parser)]
#[command(
    name = "mzsim",
    version,
    about = "Two-mode coherent-state interferometry: fringe sweeps, sensitivities, \
             cross-validation, and shot-level Monte Carlo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the detector mean over phase and write a CSV fringe
    Interferogram(SweepFlags),
    /// Sweep the squared phase sensitivity over phase and write a CSV
    Sensitivity(SweepFlags),
    /// Run the oracle-agreement and cross-route identity suites
    Validate(ValidateFlags),
    /// Calibrate the parity phase estimator against its prediction
    Montecarlo(MonteCarloFlags),
}

#[derive(Args, Debug)]
struct SweepFlags {
    /// Detection scheme: mu | nu | noon | parity
    #[arg(long)]
    scheme: Option<String>,
    /// Mean photon number of the source
    #[arg(long)]
    nbar: Option<f64>,
    /// Projector order for the noon scheme [default: round(nbar)]
    #[arg(long)]
    order: Option<usize>,
    /// Number of phase samples (at least 2)
    #[arg(long)]
    points: Option<usize>,
    /// Sweep start, radians
    #[arg(long, allow_hyphen_values = true)]
    phi_min: Option<f64>,
    /// Sweep end, radians
    #[arg(long, allow_hyphen_values = true)]
    phi_max: Option<f64>,
    /// Truncation tail tolerance, in (0, 1)
    #[arg(long)]
    tail_tol: Option<f64>,
    /// Finite-difference phase step, in (0, 1)
    #[arg(long)]
    fd_step: Option<f64>,
    /// Seed recorded in the CSV header (sweeps are deterministic)
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value file supplying any long option
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateFlags {
    /// Truncation tail tolerance, in (0, 1)
    #[arg(long)]
    tail_tol: Option<f64>,
    /// Finite-difference phase step, in (0, 1)
    #[arg(long)]
    fd_step: Option<f64>,
    /// Wire the interferometer in the opposite port convention
    #[arg(long)]
    flip_convention: bool,
    /// Flat key=value file supplying any long option
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MonteCarloFlags {
    /// Mean photon number of the source
    #[arg(long)]
    nbar: Option<f64>,
    /// True phase to estimate, radians
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Shots per trial
    #[arg(long)]
    shots: Option<u64>,
    /// Independent trials (2 or more calibrate; 1 skips the empirical column)
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed for the per-trial streams
    #[arg(long)]
    seed: Option<u64>,
    /// Truncation tail tolerance, recorded in the CSV header
    #[arg(long)]
    tail_tol: Option<f64>,
    /// Finite-difference phase step, recorded in the CSV header
    #[arg(long)]
    fd_step: Option<f64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value file supplying any long option
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    /// Bad configuration or runtime error: exit 2.
    Config(String),
    /// A validation suite failed: exit 1.
    ValidationFailed,
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.to_string())
    }
}

/// Parses arguments from the process environment and runs the tool.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::ValidationFailed) => ExitCode::from(1),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Interferogram(flags) => {
            let cfg = SweepConfig::resolve(flags)?;
            let text = render_interferogram(&cfg)?;
            emit(&cfg.out, &text)
        }
        Command::Sensitivity(flags) => {
            let cfg = SweepConfig::resolve(flags)?;
            let text = render_sensitivity(&cfg)?;
            emit(&cfg.out, &text)
        }
        Command::Validate(flags) => run_validate(flags),
        Command::Montecarlo(flags) => {
            let cfg = MonteCarloConfig::resolve(flags)?;
            let text = render_montecarlo(&cfg)?;
            emit(&cfg.out, &text)
        }
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration resolution
// ---------------------------------------------------------------------------

type ConfigMap = HashMap<String, String>;

fn parse_config_file(path: &Path) -> Result<ConfigMap, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = ConfigMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::Config(format!("config line {} is not key=value: {raw:?}", idx + 1))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn load_config(path: &Option<PathBuf>, allowed: &[&str]) -> Result<ConfigMap, Failure> {
    let map = match path {
        Some(p) => parse_config_file(p)?,
        None => ConfigMap::new(),
    };
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Failure::Config(format!(
                "unknown config key {key:?} (known keys: {})",
                allowed.join(", ")
            )));
        }
    }
    Ok(map)
}

/// Flag value, else config-file value, else default.
fn resolve_opt<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigMap,
    key: &str,
    default: T,
) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(s) => s
            .parse()
            .map_err(|e| Failure::Config(format!("config key {key}: cannot parse {s:?}: {e}"))),
        None => Ok(default),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SchemeChoice {
    Mu,
    Nu,
    Noon,
    Parity,
}

impl SchemeChoice {
    fn parse(s: &str) -> Result<Self, Failure> {
        match s {
            "mu" => Ok(SchemeChoice::Mu),
            "nu" => Ok(SchemeChoice::Nu),
            "noon" => Ok(SchemeChoice::Noon),
            "parity" => Ok(SchemeChoice::Parity),
            other => Err(Failure::Config(format!(
                "unknown scheme {other:?} (expected mu, nu, noon, or parity)"
            ))),
        }
    }

    fn label(self) -> &'static str {
        match self {
            SchemeChoice::Mu => "mu",
            SchemeChoice::Nu => "nu",
            SchemeChoice::Noon => "noon",
            SchemeChoice::Parity => "parity",
        }
    }

    fn detection(self, order: usize) -> DetectionScheme {
        match self {
            SchemeChoice::Mu => DetectionScheme::MuSum,
            SchemeChoice::Nu => DetectionScheme::NuSum,
            SchemeChoice::Noon => DetectionScheme::NoonProjector(order),
            SchemeChoice::Parity => DetectionScheme::ParityA,
        }
    }
}

#[derive(Debug)]
struct SweepConfig {
    scheme: SchemeChoice,
    nbar: f64,
    order: usize,
    points: usize,
    phi_min: f64,
    phi_max: f64,
    tail_tol: f64,
    fd_step: f64,
    seed: u64,
    out: Option<PathBuf>,
}

const SWEEP_KEYS: &[&str] = &[
    "scheme", "nbar", "order", "points", "phi-min", "phi-max", "tail-tol", "fd-step", "seed", "out",
];

impl SweepConfig {
    fn resolve(flags: SweepFlags) -> Result<Self, Failure> {
        let cfg = load_config(&flags.config, SWEEP_KEYS)?;
        let scheme_name = resolve_opt(flags.scheme, &cfg, "scheme", "mu".to_string())?;
        let scheme = SchemeChoice::parse(&scheme_name)?;
        let nbar = resolve_opt(flags.nbar, &cfg, "nbar", DEFAULT_NBAR)?;
        let order = resolve_opt(flags.order, &cfg, "order", nbar.round().max(0.0) as usize)?;
        let points = resolve_opt(flags.points, &cfg, "points", DEFAULT_POINTS)?;
        let phi_min = resolve_opt(flags.phi_min, &cfg, "phi-min", -std::f64::consts::PI)?;
        let phi_max = resolve_opt(flags.phi_max, &cfg, "phi-max", std::f64::consts::PI)?;
        let tail_tol = resolve_opt(flags.tail_tol, &cfg, "tail-tol", DEFAULT_TAIL_TOL)?;
        let fd_step = resolve_opt(flags.fd_step, &cfg, "fd-step", DEFAULT_FD_STEP)?;
        let seed = resolve_opt(flags.seed, &cfg, "seed", DEFAULT_SEED)?;
        let out = match flags.out {
            Some(p) => Some(p),
            None => cfg.get("out").map(PathBuf::from),
        };
        let resolved = Self {
            scheme,
            nbar,
            order,
            points,
            phi_min,
            phi_max,
            tail_tol,
            fd_step,
            seed,
            out,
        };
        resolved.validate()?;
        Ok(resolved)
    }

    fn validate(&self) -> Result<(), Failure> {
        if !(self.nbar.is_finite() && self.nbar > 0.0) {
            return Err(Failure::Config(format!(
                "nbar must be positive and finite, got {}",
                self.nbar
            )));
        }
        if self.points < 2 {
            return Err(Failure::Config(format!(
                "points must be at least 2, got {}",
                self.points
            )));
        }
        if !(self.phi_min.is_finite() && self.phi_max.is_finite() && self.phi_min < self.phi_max) {
            return Err(Failure::Config(format!(
                "need finite phi-min < phi-max, got [{}, {}]",
                self.phi_min, self.phi_max
            )));
        }
        check_unit_interval("tail-tol", self.tail_tol)?;
        check_unit_interval("fd-step", self.fd_step)?;
        Ok(())
    }

    fn options(&self) -> MeasureOptions {
        MeasureOptions {
            tail_tol: self.tail_tol,
            fd_step: self.fd_step,
        }
    }

    fn phis(&self) -> Vec<f64> {
        linspace(self.phi_min, self.phi_max, self.points)
    }

    fn metadata(&self, command: &str) -> String {
        let mut m = String::new();
        let _ = writeln!(m, "# mzsim {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(m, "# command = {command}");
        let _ = writeln!(m, "# convention = {}", CONVENTION.name());
        let _ = writeln!(m, "# scheme = {}", self.scheme.label());
        let _ = writeln!(m, "# nbar = {}", self.nbar);
        if self.scheme == SchemeChoice::Noon {
            let _ = writeln!(m, "# order = {}", self.order);
        }
        let _ = writeln!(m, "# points = {}", self.points);
        let _ = writeln!(m, "# phi-min = {}", self.phi_min);
        let _ = writeln!(m, "# phi-max = {}", self.phi_max);
        let _ = writeln!(m, "# tail-tol = {:e}", self.tail_tol);
        let _ = writeln!(m, "# fd-step = {:e}", self.fd_step);
        let _ = writeln!(m, "# seed = {}", self.seed);
        m
    }
}

fn check_unit_interval(name: &str, value: f64) -> Result<(), Failure> {
    if !(value.is_finite() && value > 0.0 && value < 1.0) {
        return Err(Failure::Config(format!(
            "{name} must lie strictly inside (0, 1), got {value}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV rendering
// ---------------------------------------------------------------------------

/// One CSV cell: 12 significant digits, or empty where undefined.
fn cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.11e}"),
        None => String::new(),
    }
}

fn render_interferogram(cfg: &SweepConfig) -> Result<String, Failure> {
    let scheme = cfg.scheme.detection(cfg.order);
    let rows: Vec<(f64, f64, f64)> = cfg
        .phis()
        .par_iter()
        .map(|&phi| -> Result<_, Failure> {
            let params = SourceParams::new(cfg.nbar, phi, cfg.order)?;
            let state = scheme_state(&params, scheme, cfg.tail_tol)?;
            let numeric = expectation(&state, scheme)?;
            let analytic = match cfg.scheme {
                SchemeChoice::Noon => noon_expectation(cfg.nbar, cfg.order, phi),
                SchemeChoice::Nu => nu_expectation(cfg.nbar, phi, false),
                // The cross-route identity: dark-port parity traces the
                // exchange-observable fringe.
                SchemeChoice::Mu | SchemeChoice::Parity => mu_expectation(cfg.nbar, phi),
            };
            Ok((phi, numeric, analytic))
        })
        .collect::<Result<_, _>>()?;

    let mut out = cfg.metadata("interferogram");
    out.push_str("phi,mean_numeric,mean_analytic,classical\n");
    for (phi, numeric, analytic) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            cell(Some(phi)),
            cell(Some(numeric)),
            cell(Some(analytic)),
            cell(Some(ReferenceCurves::classical_fringe(phi)))
        );
    }
    Ok(out)
}

fn render_sensitivity(cfg: &SweepConfig) -> Result<String, Failure> {
    let scheme = cfg.scheme.detection(cfg.order);
    let opts = cfg.options();
    let rows: Vec<(f64, Option<f64>, Option<f64>)> = cfg
        .phis()
        .par_iter()
        .map(|&phi| -> Result<_, Failure> {
            let params = SourceParams::new(cfg.nbar, phi, cfg.order)?;
            let record = measure_with(&params, scheme, opts)?;
            let analytic = match cfg.scheme {
                SchemeChoice::Noon => noon_sensitivity_sq(cfg.nbar, cfg.order, phi),
                SchemeChoice::Nu => nu_sensitivity_sq(cfg.nbar, phi),
                SchemeChoice::Mu | SchemeChoice::Parity => Some(mu_sensitivity_sq(cfg.nbar, phi)),
            };
            Ok((phi, record.sensitivity_sq, analytic))
        })
        .collect::<Result<_, _>>()?;

    let snl = ReferenceCurves::snl_sq(cfg.nbar);
    let hl = ReferenceCurves::hl_sq(cfg.nbar);
    let mut out = cfg.metadata("sensitivity");
    out.push_str("phi,sens_sq_numeric,sens_sq_analytic,snl_sq,hl_sq\n");
    for (phi, numeric, analytic) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            cell(Some(phi)),
            cell(numeric),
            cell(analytic),
            cell(Some(snl)),
            cell(Some(hl))
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

const VALIDATE_KEYS: &[&str] = &["tail-tol", "fd-step", "flip-convention"];

fn run_validate(flags: ValidateFlags) -> Result<(), Failure> {
    let cfg = load_config(&flags.config, VALIDATE_KEYS)?;
    let tail_tol = resolve_opt(flags.tail_tol, &cfg, "tail-tol", DEFAULT_TAIL_TOL)?;
    let fd_step = resolve_opt(flags.fd_step, &cfg, "fd-step", DEFAULT_FD_STEP)?;
    let flip = if flags.flip_convention {
        true
    } else {
        resolve_opt(None, &cfg, "flip-convention", false)?
    };
    check_unit_interval("tail-tol", tail_tol)?;
    check_unit_interval("fd-step", fd_step)?;

    println!(
        "mzsim {} validation (convention {})",
        env!("CARGO_PKG_VERSION"),
        CONVENTION.name()
    );
    println!("tail-tol = {tail_tol}, fd-step = {fd_step}, flip-convention = {flip}");

    let suites = vec![
        run_oracle_suite(tail_tol, fd_step)?,
        run_identity_suite(tail_tol, flip)?,
    ];
    let mut all_passed = true;
    for suite in &suites {
        print_suite(suite);
        all_passed &= suite.passed();
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::ValidationFailed)
    }
}

fn print_suite(suite: &SuiteReport) {
    const MAX_SHOWN: usize = 20;
    println!(
        "suite {}: {} ({} comparisons, worst |diff| {:.3e})",
        suite.name,
        if suite.passed() { "PASS" } else { "FAIL" },
        suite.points_checked,
        suite.worst_abs_diff
    );
    for failure in suite.failures.iter().take(MAX_SHOWN) {
        println!("  {failure}");
    }
    if suite.failures.len() > MAX_SHOWN {
        println!("  ... and {} more", suite.failures.len() - MAX_SHOWN);
    }
}

// ---------------------------------------------------------------------------
// montecarlo
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct MonteCarloConfig {
    nbar: f64,
    phi: f64,
    shots: u64,
    trials: u64,
    seed: u64,
    /// Recorded in the header only: the estimator evaluates closed forms,
    /// so no truncation or differencing enters the sampling itself.
    tail_tol: f64,
    fd_step: f64,
    out: Option<PathBuf>,
}

const MC_KEYS: &[&str] = &[
    "nbar", "phi", "shots", "trials", "seed", "tail-tol", "fd-step", "out",
];

impl MonteCarloConfig {
    fn resolve(flags: MonteCarloFlags) -> Result<Self, Failure> {
        let cfg = load_config(&flags.config, MC_KEYS)?;
        let resolved = Self {
            nbar: resolve_opt(flags.nbar, &cfg, "nbar", DEFAULT_NBAR)?,
            phi: resolve_opt(flags.phi, &cfg, "phi", DEFAULT_MC_PHI)?,
            shots: resolve_opt(flags.shots, &cfg, "shots", DEFAULT_MC_SHOTS)?,
            trials: resolve_opt(flags.trials, &cfg, "trials", DEFAULT_MC_TRIALS)?,
            seed: resolve_opt(flags.seed, &cfg, "seed", DEFAULT_SEED)?,
            tail_tol: resolve_opt(flags.tail_tol, &cfg, "tail-tol", DEFAULT_TAIL_TOL)?,
            fd_step: resolve_opt(flags.fd_step, &cfg, "fd-step", DEFAULT_FD_STEP)?,
            out: match flags.out {
                Some(p) => Some(p),
                None => cfg.get("out").map(PathBuf::from),
            },
        };
        if !(resolved.nbar.is_finite() && resolved.nbar > 0.0) {
            return Err(Failure::Config(format!(
                "nbar must be positive and finite, got {}",
                resolved.nbar
            )));
        }
        if resolved.shots == 0 {
            return Err(Failure::Config("shots must be at least 1".into()));
        }
        if resolved.trials == 0 {
            return Err(Failure::Config("trials must be at least 1".into()));
        }
        if !resolved.phi.is_finite() {
            return Err(Failure::Config(format!(
                "phi must be finite, got {}",
                resolved.phi
            )));
        }
        check_unit_interval("tail-tol", resolved.tail_tol)?;
        check_unit_interval("fd-step", resolved.fd_step)?;
        Ok(resolved)
    }
}

fn render_montecarlo(cfg: &MonteCarloConfig) -> Result<String, Failure> {
    // A single trial cannot yield a spread; the empirical column is left
    // empty and only the closed-form prediction is reported.
    let empirical = if cfg.trials >= 2 {
        let est = empirical_sensitivity(cfg.nbar, cfg.phi, cfg.shots, cfg.trials, cfg.seed)?;
        Some(est.dphi_per_shot)
    } else {
        None
    };
    let predicted = mu_sensitivity_sq(cfg.nbar, cfg.phi).sqrt();

    let mut out = String::new();
    let _ = writeln!(out, "# mzsim {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# command = montecarlo");
    let _ = writeln!(out, "# convention = {}", CONVENTION.name());
    let _ = writeln!(out, "# nbar = {}", cfg.nbar);
    let _ = writeln!(out, "# phi = {}", cfg.phi);
    let _ = writeln!(out, "# tail-tol = {:e}", cfg.tail_tol);
    let _ = writeln!(out, "# fd-step = {:e}", cfg.fd_step);
    let _ = writeln!(out, "# seed = {}", cfg.seed);
    out.push_str("shots,trials,dphi_empirical,dphi_predicted\n");
    let _ = writeln!(
        out,
        "{},{},{},{}",
        cfg.shots,
        cfg.trials,
        cell(empirical),
        cell(Some(predicted))
    );
    Ok(out)
}
