//! Run configuration. TOML with fixed sections; every table rejects unknown
//! keys, and [`RunConfig::validate`] checks everything before a single field
//! is allocated.

use std::path::{Path, PathBuf};

use chdyn_core::diagnostics::{self, KappaReport};
use chdyn_core::integrator::{stability_ceiling, StepperConfig};
use chdyn_core::model::{validate_assumptions, ModelParams, Polynomial};
use chdyn_core::GridSpec;
use serde::Deserialize;

use crate::error::AppError;

/// Largest accepted node count; keeps a typo from allocating gigabytes.
pub const MAX_NODES: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub params: ParamsSection,
    pub stepper: StepperSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub steady: SteadySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: f64,
    /// Ascending coefficients of `f`.
    pub f: Vec<f64>,
    /// Ascending coefficients of `g`.
    pub g: Vec<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let dw = vec![0.0, -1.0, 0.0, 1.0];
        Self { epsilon: 1.0, sigma: 1.0, alpha: 1.0, f: dw.clone(), g: dw }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub cadence: u64,
    /// Snapshot every this many steps; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_every: u64,
    /// Range of `χ` used for the time-step ceiling.
    #[serde(default = "default_range")]
    pub state_range: [f64; 2],
    #[serde(default = "half")]
    pub safety: f64,
}

fn one() -> u64 {
    1
}

fn half() -> f64 {
    0.5
}

fn default_range() -> [f64; 2] {
    [-1.5, 1.5]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub kappa1: f64,
    pub kappa2: f64,
    /// Equilibrium snapshot; when set, `x_norm` is the distance to it.
    pub reference: Option<PathBuf>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { kappa1: 1e-2, kappa2: 1e-2, reference: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    ConstantEquilibrium,
    Spinodal,
    MeanOde,
}

/// Scenario keys. Each scenario accepts a subset, see [`ScenarioSection::check`].
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: ScenarioName,
    /// Constant value of `χ` (constant-equilibrium) or the mean of `χ₀`.
    pub chi: Option<f64>,
    pub theta: Option<f64>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
    /// Highest wavenumbers `[kx, ky]` of the random perturbation.
    pub modes: Option<[u32; 2]>,
    /// Mean of the initial velocity (mean-ode).
    pub chi1_mean: Option<f64>,
    /// Amplitude of a rotational initial flux.
    pub flux_amplitude: Option<f64>,
}

impl ScenarioSection {
    fn check(&self) -> Result<(), AppError> {
        let set = [
            ("chi", self.chi.is_some()),
            ("theta", self.theta.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("seed", self.seed.is_some()),
            ("modes", self.modes.is_some()),
            ("chi1_mean", self.chi1_mean.is_some()),
            ("flux_amplitude", self.flux_amplitude.is_some()),
        ];
        let allowed: &[&str] = match self.name {
            ScenarioName::ConstantEquilibrium => &["chi", "theta", "flux_amplitude"],
            ScenarioName::Spinodal => &["chi", "theta", "amplitude", "seed", "modes", "flux_amplitude"],
            ScenarioName::MeanOde => &["chi", "theta", "amplitude", "seed", "modes", "chi1_mean", "flux_amplitude"],
        };
        for (key, present) in set {
            if present && !allowed.contains(&key) {
                return Err(AppError::Config(format!("scenario {:?} does not take key `{key}`", self.name)));
            }
        }
        for (key, v) in [("chi", self.chi), ("theta", self.theta), ("chi1_mean", self.chi1_mean), ("flux_amplitude", self.flux_amplitude)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(AppError::Config(format!("scenario.{key} must be finite")));
                }
            }
        }
        if let Some(a) = self.amplitude {
            if !(a.is_finite() && a >= 0.0) {
                return Err(AppError::Config(format!("scenario.amplitude must be nonnegative, got {a}")));
            }
        }
        if let Some([kx, ky]) = self.modes {
            if kx == 0 && ky == 0 {
                return Err(AppError::Config("scenario.modes must allow at least one nonconstant mode".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySection {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SteadySection {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Everything a run needs, checked.
#[derive(Debug, Clone)]
pub struct Validated {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub stepper: StepperConfig,
    pub kappa: KappaReport,
    pub ceiling: f64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative reference paths are taken from the config file's directory
        if let (Some(r), Some(dir)) = (&cfg.diagnostics.reference, path.parent()) {
            if r.is_relative() {
                cfg.diagnostics.reference = Some(dir.join(r));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<Validated, AppError> {
        let g = &self.grid;
        let grid = GridSpec::new(g.lx, g.ly, g.nx, g.ny).map_err(config)?;
        if g.nx.saturating_mul(g.ny) > MAX_NODES {
            return Err(AppError::Config(format!("grid {}x{} exceeds {MAX_NODES} nodes", g.nx, g.ny)));
        }
        let p = &self.params;
        let params = ModelParams::new(p.epsilon, p.sigma, p.alpha, Polynomial::new(p.f.clone()), Polynomial::new(p.g.clone()))
            .map_err(config)?;
        validate_assumptions(&params).map_err(config)?;
        let s = &self.stepper;
        let stepper = StepperConfig { dt: s.dt, t_end: s.t_end, cadence: s.cadence };
        stepper.validate().map_err(config)?;
        let [lo, hi] = s.state_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(AppError::Config(format!("stepper.state_range must be an increasing pair, got [{lo}, {hi}]")));
        }
        if !(s.safety.is_finite() && s.safety > 0.0) {
            return Err(AppError::Config(format!("stepper.safety must be positive, got {}", s.safety)));
        }
        let ceiling = stability_ceiling(&params, (lo, hi), s.safety);
        if s.dt > ceiling {
            return Err(AppError::Config(format!("dt = {} exceeds the step ceiling {ceiling:e}", s.dt)));
        }
        let d = &self.diagnostics;
        if !(d.kappa1.is_finite() && d.kappa1 > 0.0 && d.kappa2.is_finite() && d.kappa2 > 0.0) {
            return Err(AppError::Config("diagnostics.kappa1 and kappa2 must be positive".into()));
        }
        let kappa = diagnostics::kappa_preflight(&grid, d.kappa1, d.kappa2);
        if !kappa.passed() {
            return Err(AppError::Config(format!("kappa preflight failed\n{}", diagnostics::describe(&kappa))));
        }
        self.scenario.check()?;
        let st = &self.steady;
        if !(st.tol.is_finite() && st.tol > 0.0) || st.max_iterations == 0 {
            return Err(AppError::Config("steady.tol must be positive and max_iterations at least 1".into()));
        }
        Ok(Validated { grid, params, stepper, kappa, ceiling })
    }
}

fn config(e: chdyn_core::Error) -> AppError {
    AppError::Config(e.to_string())
}
