//! Subcommand bodies. Each returns the text to print on success; failures
//! carry their exit code in [`AppError`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chdyn_core::diagnostics::{DiagnosticRecord, Diagnostics, DiagnosticsConfig, ReferenceMeans};
use chdyn_core::grid;
use chdyn_core::steady::{self, NewtonOptions};
use chdyn_core::{Stepper, SystemState};

use crate::config::{RunConfig, Validated};
use crate::error::AppError;
use crate::scenario;
use crate::snapshot::{Kind, Snapshot};
use crate::table::{self, CsvSink};
use crate::verify;

pub const CSV_NAME: &str = "diagnostics.csv";
pub const FINAL_NAME: &str = "final.chc";
pub const EQUILIBRIUM_NAME: &str = "equilibrium.chc";
pub const STEADY_REPORT: &str = "steady_report.txt";

pub fn snapshot_name(steps: u64) -> String {
    format!("snapshot_{steps:010}.chc")
}

pub struct SimulationOutput {
    pub records: Vec<DiagnosticRecord>,
    pub final_state: SystemState,
    pub reference: ReferenceMeans,
}

fn load_config(path: &Path) -> Result<(RunConfig, Validated), AppError> {
    let cfg = RunConfig::load(path)?;
    let v = cfg.validate()?;
    if cfg.stepper.snapshot_every % cfg.stepper.cadence != 0 {
        return Err(AppError::Config("stepper.snapshot_every must be a multiple of cadence".into()));
    }
    Ok((cfg, v))
}

fn out_dir(cfg: &RunConfig, over: Option<&Path>) -> Result<PathBuf, AppError> {
    let dir = over.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Runs a configured simulation, from the scenario or from `restart`, writing
/// the CSV and snapshots into `dir`.
pub fn simulate_with(cfg: &RunConfig, v: &Validated, restart: Option<&Path>, dir: &Path) -> Result<SimulationOutput, AppError> {
    let (s0, reference) = match restart {
        Some(path) => {
            let snap = Snapshot::read(path)?;
            snap.check_matches(&v.grid, &v.params)?;
            if snap.kind != Kind::State {
                return Err(AppError::Config("restart needs a trajectory snapshot, not an equilibrium".into()));
            }
            if snap.dt.to_bits() != v.stepper.dt.to_bits() {
                return Err(AppError::Config(format!("snapshot dt {} differs from config dt {}", snap.dt, v.stepper.dt)));
            }
            (snap.state, snap.reference)
        }
        None => {
            let s0 = scenario::initial_state(v.grid, &cfg.scenario)?;
            let r = ReferenceMeans::of(&s0);
            (s0, r)
        }
    };
    let eq = match &cfg.diagnostics.reference {
        Some(path) => {
            let snap = Snapshot::read(path)?;
            if snap.state.grid() != &v.grid {
                return Err(AppError::Config("reference snapshot grid differs from the config grid".into()));
            }
            Some(snap.state)
        }
        None => None,
    };
    let dcfg = DiagnosticsConfig { kappa1: cfg.diagnostics.kappa1, kappa2: cfg.diagnostics.kappa2, reference };
    let diag = Diagnostics::new(v.grid, v.params.clone(), v.stepper.dt, dcfg)?;
    let stepper = Stepper::new(v.grid, v.params.clone(), v.stepper.dt)?;
    let snapshot_every = cfg.stepper.snapshot_every;

    let csv = fs::File::create(dir.join(CSV_NAME))?;
    let mut sink = CsvSink::new(std::io::BufWriter::new(csv))?;
    let mut records = Vec::new();
    let mut io_error = None;
    let mut observer = |s: &SystemState| -> chdyn_core::Result<()> {
        let r = diag.record(s, eq.as_ref())?;
        if !r.is_finite() {
            return Err(chdyn_core::Error::NonFinite { step: s.steps });
        }
        let mut io = || -> Result<(), AppError> {
            sink.push(&r)?;
            if snapshot_every > 0 && s.steps % snapshot_every == 0 {
                Snapshot::of_state(s, &v.params, v.stepper.dt, reference).write(&dir.join(snapshot_name(s.steps)))?;
            }
            Ok(())
        };
        if let Err(e) = io() {
            io_error = Some(e);
            // abort the run; the real error is reported below
            return Err(chdyn_core::Error::NonFinite { step: s.steps });
        }
        records.push(r);
        Ok(())
    };
    let result = stepper.run(s0, &v.stepper, &mut observer);
    if let Some(e) = io_error {
        return Err(e);
    }
    let final_state = result?;
    sink.finish()?;
    Snapshot::of_state(&final_state, &v.params, v.stepper.dt, reference).write(&dir.join(FINAL_NAME))?;
    Ok(SimulationOutput { records, final_state, reference })
}

pub fn simulate(config: &Path, output: Option<&Path>, restart: Option<&Path>) -> Result<String, AppError> {
    let (cfg, v) = load_config(config)?;
    let dir = out_dir(&cfg, output)?;
    let out = simulate_with(&cfg, &v, restart, &dir)?;
    let last = out.records.last().expect("run observes at least the initial state");
    Ok(format!(
        "simulate: {} rows, t = {}, steps = {}, x_norm = {:.6e}, wrote {}",
        out.records.len(),
        out.final_state.t,
        out.final_state.steps,
        last.x_norm,
        dir.join(CSV_NAME).display()
    ))
}

pub struct SteadyOutput {
    pub equilibrium: steady::Equilibrium,
    pub reference: ReferenceMeans,
    pub report: String,
}

pub fn steady_with(cfg: &RunConfig, v: &Validated, seed: Option<&Path>, dir: &Path) -> Result<SteadyOutput, AppError> {
    let (chi, reference) = match seed {
        Some(path) => {
            let snap = Snapshot::read(path)?;
            snap.check_matches(&v.grid, &v.params)?;
            (snap.state.chi, snap.reference)
        }
        None => {
            let s0 = scenario::initial_state(v.grid, &cfg.scenario)?;
            let r = ReferenceMeans::of(&s0);
            (s0.chi, r)
        }
    };
    let eps = v.params.epsilon;
    let m = reference.chi_limit(eps);
    let opts = NewtonOptions { tol: cfg.steady.tol, max_iterations: cfg.steady.max_iterations, ..NewtonOptions::default() };
    let eq = steady::solve_stationary(&chi, m, reference.theta_limit(eps), &v.params, &opts)?;
    let recomputed = steady::stationary_residual(&eq.chi_inf, eq.mu_inf, m, &v.params)?;
    let identity = (eq.mu_inf - eq.mu_identity(&v.params)).abs();
    let snap = Snapshot::of_equilibrium(&eq, &v.params, v.stepper.dt, reference);
    snap.write(&dir.join(EQUILIBRIUM_NAME))?;
    let mut report = String::new();
    let _ = writeln!(report, "iterations {}", eq.iterations);
    let _ = writeln!(report, "residual {:.6e}", eq.residual_norm);
    let _ = writeln!(report, "residual_reloaded {:.6e}", recomputed);
    let _ = writeln!(report, "mu_inf {:.17e}", eq.mu_inf);
    let _ = writeln!(report, "mu_identity_gap {:.6e}", identity);
    let _ = writeln!(report, "mean_chi {:.17e} (target {:.17e})", grid::mean(&eq.chi_inf), m);
    let _ = writeln!(report, "theta_inf {:.17e}", eq.theta_inf);
    fs::write(dir.join(STEADY_REPORT), &report)?;
    Ok(SteadyOutput { equilibrium: eq, reference, report })
}

pub fn steady_cmd(config: &Path, output: Option<&Path>, seed: Option<&Path>) -> Result<String, AppError> {
    let (cfg, v) = load_config(config)?;
    let dir = out_dir(&cfg, output)?;
    let out = steady_with(&cfg, &v, seed, &dir)?;
    Ok(format!("steady: wrote {}\n{}", dir.join(EQUILIBRIUM_NAME).display(), out.report.trim_end()))
}

/// Fit over rows with `t ≥ window_start` (default: second half of the run)
/// and distances above `floor` (default: ten times the equilibrium residual,
/// at least 1e−12).
pub fn fit_decay_cmd(csv: &Path, equilibrium: &Path, window_start: Option<f64>, floor: Option<f64>, min_r2: f64) -> Result<String, AppError> {
    let rows = table::read_records(csv)?;
    let snap = Snapshot::read(equilibrium)?;
    if snap.kind != Kind::Equilibrium {
        return Err(AppError::Input("fit-decay needs an equilibrium snapshot".into()));
    }
    let t_last = rows.last().map_or(0.0, |r| r.t);
    let start = window_start.unwrap_or(0.5 * t_last);
    let floor = floor.unwrap_or_else(|| (10.0 * snap.residual).max(1e-12));
    let (t, d): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.t >= start).map(|r| (r.t, r.x_norm)).unzip();
    let fit = steady::fit_decay(&t, &d, floor).map_err(|e| AppError::Check(e.to_string()))?;
    let model = match fit.model {
        steady::DecayModel::Algebraic => "algebraic",
        steady::DecayModel::Exponential => "exponential",
    };
    let mut s = String::new();
    let _ = writeln!(s, "window t >= {start}, floor {floor:.3e}, points {}", fit.points);
    let _ = writeln!(s, "model {model}");
    let _ = writeln!(s, "exponent {:.6e}", fit.exponent);
    let _ = writeln!(s, "rho {:.6e}", fit.rho);
    let _ = writeln!(s, "r2 {:.6}", fit.r2);
    let _ = writeln!(s, "r2_algebraic {:.6} (exponent {:.6e})", fit.r2_algebraic, fit.algebraic_exponent);
    let _ = writeln!(s, "r2_exponential {:.6} (rate {:.6e})", fit.r2_exponential, fit.exponential_rate);
    let _ = write!(s, "monotone {}", fit.monotone);
    if fit.r2 < min_r2 || !fit.monotone {
        return Err(AppError::Check(format!("decay fit rejected (r2 {:.4} vs {min_r2}, monotone {})\n{s}", fit.r2, fit.monotone)));
    }
    Ok(s)
}

/// Returns the report and whether every check passed.
pub fn verify_cmd(csv: &Path, lyapunov_slack: f64) -> Result<(String, bool), AppError> {
    let rows = table::read_records(csv)?;
    let lines = verify::run_checks(&rows, lyapunov_slack);
    let ok = lines.iter().all(|l| l.passed);
    let text = lines.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("\n");
    Ok((text, ok))
}
