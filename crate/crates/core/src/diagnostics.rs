//! Runtime observables: conserved totals, mean trajectories, the phase-space
//! norm, the energy `𝒴`, the Lyapunov functionals `ℰ`, `𝒢`, `ℋ = ℰ + κ₂𝒢`
//! and the dissipation rate `𝒟`.
//!
//! Tilde variables subtract instantaneous means; the velocity mean `Q₁` uses
//! the discrete recursion of the stepper so `⟨ṽ⟩` vanishes to rounding.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{self, BoundaryField, FluxField, GridSpec, InteriorField};
use crate::integrator::{discrete_mean_v, SystemState};
use crate::model::ModelParams;
use crate::operators::{self, Closure, InversePoissonSolver};

/// Means of the initial data: `⟨θ₀⟩`, `⟨χ₀⟩` and `⟨χ₁⟩ = ⟨v(0)⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMeans {
    pub theta0: f64,
    pub chi0: f64,
    pub chi1: f64,
}

impl ReferenceMeans {
    pub fn of(s0: &SystemState) -> Self {
        Self { theta0: grid::mean(&s0.theta), chi0: grid::mean(&s0.chi), chi1: grid::mean(&s0.v) }
    }

    /// Limit of `⟨χ⟩`, `⟨χ₀⟩ + ε⟨χ₁⟩`; the shift inside `f̂`, `ĝ`.
    pub fn chi_limit(&self, epsilon: f64) -> f64 {
        self.chi0 + epsilon * self.chi1
    }

    /// Limit of `⟨θ⟩`, `⟨θ₀⟩ − ε⟨χ₁⟩`.
    pub fn theta_limit(&self, epsilon: f64) -> f64 {
        self.theta0 - epsilon * self.chi1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsConfig {
    pub kappa1: f64,
    pub kappa2: f64,
    pub reference: ReferenceMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl Constraint {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Smallness conditions on `κ₁`, `κ₂` with grid Poincaré constants
/// `C_P = λ₁^{−1/2}` and `C_Ω = max(1, λ₁^{−1/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaReport {
    pub lambda1: f64,
    pub c_p: f64,
    pub c_omega: f64,
    pub constraints: Vec<Constraint>,
}

impl KappaReport {
    pub fn passed(&self) -> bool {
        self.constraints.iter().all(Constraint::holds)
    }

    pub fn into_result(self) -> Result<Self> {
        if let Some(c) = self.constraints.iter().find(|c| !c.holds()) {
            return Err(Error::InvalidParams(format!(
                "kappa constraint {} violated: {:e} > {:e}",
                c.name, c.lhs, c.rhs
            )));
        }
        Ok(self)
    }
}

pub fn kappa_preflight(grid: &GridSpec, kappa1: f64, kappa2: f64) -> KappaReport {
    let lambda1 = operators::smallest_eigenvalue(grid);
    let c_p = 1.0 / libm::sqrt(lambda1);
    let c_omega = c_p.max(1.0);
    let constraints = alloc::vec![
        Constraint { name: "kappa1 <= 1/4", lhs: kappa1, rhs: 0.25 },
        Constraint { name: "kappa2*C_O <= 1/2", lhs: kappa2 * c_omega, rhs: 0.5 },
        Constraint { name: "kappa1 + kappa2*C_O/2 <= 1/2", lhs: kappa1 + 0.5 * kappa2 * c_omega, rhs: 0.5 },
        Constraint { name: "kappa2*C_O*(C_O+3)/2 <= 1/2", lhs: 0.5 * kappa2 * c_omega * (c_omega + 3.0), rhs: 0.5 },
        Constraint { name: "kappa1*C_P^2/2 <= kappa2/4", lhs: 0.5 * kappa1 * c_p * c_p, rhs: 0.25 * kappa2 },
    ];
    KappaReport { lambda1, c_p, c_omega, constraints }
}

/// Tilde variables of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilde {
    pub theta: InteriorField,
    pub chi: InteriorField,
    pub xi: BoundaryField,
    pub v: InteriorField,
    /// `trace(v) − Q₁`.
    pub xi_t: BoundaryField,
    pub q1: f64,
}

/// One row of the diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub conserved_total: f64,
    pub mean_chi: f64,
    pub mean_v: f64,
    pub x_norm: f64,
    pub energy_y: f64,
    pub lyap_e: f64,
    pub func_g: f64,
    pub lyap_h: f64,
    pub dissipation_d: f64,
    pub curl_norm: f64,
    pub trace_residual: f64,
}

impl DiagnosticRecord {
    pub const COLUMNS: [&'static str; 12] = [
        "t",
        "conserved_total",
        "mean_chi",
        "mean_v",
        "x_norm",
        "energy_Y",
        "lyap_E",
        "func_G",
        "lyap_H",
        "dissipation_D",
        "curl_norm",
        "trace_residual",
    ];

    pub fn to_array(&self) -> [f64; 12] {
        [
            self.t,
            self.conserved_total,
            self.mean_chi,
            self.mean_v,
            self.x_norm,
            self.energy_y,
            self.lyap_e,
            self.func_g,
            self.lyap_h,
            self.dissipation_d,
            self.curl_norm,
            self.trace_residual,
        ]
    }

    pub fn from_array(a: [f64; 12]) -> Self {
        Self {
            t: a[0],
            conserved_total: a[1],
            mean_chi: a[2],
            mean_v: a[3],
            x_norm: a[4],
            energy_y: a[5],
            lyap_e: a[6],
            func_g: a[7],
            lyap_h: a[8],
            dissipation_d: a[9],
            curl_norm: a[10],
            trace_residual: a[11],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

fn project(u: &InteriorField) -> InteriorField {
    u.shift(-grid::mean(u))
}

/// `sqrt(‖θ‖² + ‖q‖² + ‖(χ, ξ)‖²_{H¹} + ‖v‖²_{V*})`.
pub fn x_norm(solver: &InversePoissonSolver, s: &SystemState) -> Result<f64> {
    let a = grid::norm_l2(&s.theta);
    let b = grid::norm_flux(&s.q);
    let c = grid::pair_h1_norm(&s.chi, &s.xi)?;
    let d = operators::vstar_norm(solver, &s.v)?;
    Ok(libm::sqrt(a * a + b * b + c * c + d * d))
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    grid: GridSpec,
    params: ModelParams,
    dt: f64,
    cfg: DiagnosticsConfig,
    solver: InversePoissonSolver,
}

impl Diagnostics {
    pub fn new(grid: GridSpec, params: ModelParams, dt: f64, cfg: DiagnosticsConfig) -> Result<Self> {
        for (name, k) in [("kappa1", cfg.kappa1), ("kappa2", cfg.kappa2)] {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be nonnegative, got {k}")));
            }
        }
        let solver = InversePoissonSolver::new(grid)?;
        Ok(Self { grid, params, dt, cfg, solver })
    }

    pub fn config(&self) -> &DiagnosticsConfig {
        &self.cfg
    }

    pub fn solver(&self) -> &InversePoissonSolver {
        &self.solver
    }

    /// `A₀⁻¹P₀u`.
    fn a0inv(&self, u: &InteriorField) -> InteriorField {
        self.solver.solve_unchecked(project(u).values())
    }

    /// `‖A₀^{−1/2}P₀u‖² = (P₀u, A₀⁻¹P₀u)`.
    fn a0_norm_sq(&self, u: &InteriorField) -> Result<f64> {
        let p = project(u);
        grid::inner_l2(&p, &self.a0inv(&p))
    }

    pub fn q1(&self, steps: u64) -> f64 {
        discrete_mean_v(self.cfg.reference.chi1, self.dt, self.params.epsilon, steps)
    }

    pub fn shift(&self) -> f64 {
        self.cfg.reference.chi_limit(self.params.epsilon)
    }

    pub fn tilde_split(&self, s: &SystemState) -> Tilde {
        let mt = grid::mean(&s.theta);
        let mc = grid::mean(&s.chi);
        let q1 = self.q1(s.steps);
        Tilde {
            theta: s.theta.shift(-mt),
            chi: s.chi.shift(-mc),
            xi: s.xi.map(|x| x - mc),
            v: s.v.shift(-q1),
            xi_t: operators::trace(&s.v).map(|x| x - q1),
            q1,
        }
    }

    pub fn x_norm(&self, s: &SystemState) -> Result<f64> {
        x_norm(&self.solver, s)
    }

    fn cross_q_theta(&self, q: &FluxField, theta: &InteriorField) -> Result<f64> {
        grid::inner_flux(q, &operators::grad(&self.a0inv(theta)))
    }

    /// The energy `𝒴` with both multiplier cross terms.
    pub fn energy_y(&self, s: &SystemState) -> Result<f64> {
        let p = &self.params;
        let (k1, k2) = (self.cfg.kappa1, self.cfg.kappa2);
        let td = self.tilde_split(s);
        let nt = grid::norm_l2(&td.theta);
        let nq = grid::norm_flux(&s.q);
        let pot_f = s.chi.map(|c| p.f.potential_eval(c)).integral();
        let pot_g = grid::boundary_integral(&s.xi.map(|c| p.g.potential_eval(c)));
        let a_chi = self.a0inv(&td.chi);
        let nxi = grid::norm_gamma(&td.xi);
        let nc = grid::norm_l2(&td.chi);
        Ok(0.5 * nt * nt
            + 0.5 * p.sigma * nq * nq
            + 0.5 * p.epsilon * self.a0_norm_sq(&td.v)?
            + 0.5 * operators::dirichlet_form(&td.chi)
            + pot_f
            + 0.5 * operators::surface_dirichlet_form(&td.xi)
            + 0.5 * k1 * nxi * nxi
            + pot_g
            + k1 * grid::inner_l2(&project(&td.v), &a_chi)?
            + 0.5 * k1 * grid::inner_l2(&td.chi, &a_chi)?
            + 0.5 * k1 * p.alpha * nc * nc
            + k2 * self.cross_q_theta(&s.q, &td.theta)?)
    }

    /// `Υ(χ̃, ξ̃)` with the shifted potentials.
    fn upsilon_tilde(&self, td: &Tilde) -> f64 {
        let p = &self.params;
        let sh = self.shift();
        0.5 * operators::dirichlet_form(&td.chi)
            + 0.5 * operators::surface_dirichlet_form(&td.xi)
            + td.chi.map(|c| p.f.potential_eval(c + sh)).integral()
            + grid::boundary_integral(&td.xi.map(|c| p.g.potential_eval(c + sh)))
    }

    pub fn lyapunov_e(&self, s: &SystemState) -> Result<f64> {
        let p = &self.params;
        let td = self.tilde_split(s);
        let nt = grid::norm_l2(&td.theta);
        let nq = grid::norm_flux(&s.q);
        let nv = operators::vstar_norm(&self.solver, &td.v)?;
        Ok(self.upsilon_tilde(&td)
            + 0.5 * (nt * nt + p.sigma * nq * nq + p.epsilon * nv * nv)
            + self.cfg.kappa1 * self.cross_q_theta(&s.q, &td.theta)?)
    }

    /// `P₀(−Δχ̃ + f̂(χ̃))` with the trace closure `ξ̃`.
    fn chemical_residual(&self, td: &Tilde) -> Result<InteriorField> {
        let sh = self.shift();
        let a = operators::apply_a(&td.chi, Closure::Trace(&td.xi))?;
        let f = &self.params.f;
        let x = InteriorField::from_vec(
            self.grid,
            a.values().iter().zip(td.chi.values()).map(|(a, c)| a + f.eval(c + sh)).collect(),
        )?;
        Ok(project(&x))
    }

    pub fn func_g(&self, s: &SystemState) -> Result<f64> {
        let td = self.tilde_split(s);
        let x = self.chemical_residual(&td)?;
        grid::inner_l2(&self.a0inv(&td.v), &self.a0inv(&x))
    }

    pub fn lyap_h(&self, s: &SystemState) -> Result<f64> {
        Ok(self.lyapunov_e(s)? + self.cfg.kappa2 * self.func_g(s)?)
    }

    pub fn dissipation_d(&self, s: &SystemState) -> Result<f64> {
        let td = self.tilde_split(s);
        let nq = grid::norm_flux(&s.q);
        let nv = operators::vstar_norm(&self.solver, &td.v)?;
        let nv2 = grid::norm_l2(&td.v);
        let ng = grid::norm_gamma(&td.xi_t);
        let nt = grid::norm_l2(&td.theta);
        let x = self.chemical_residual(&td)?;
        Ok(0.5 * nq * nq
            + 0.25 * nv * nv
            + 0.5 * self.params.alpha * nv2 * nv2
            + 0.5 * ng * ng
            + 0.25 * self.cfg.kappa1 * nt * nt
            + 0.5 * self.cfg.kappa2 * grid::inner_l2(&x, &self.a0inv(&x))?
            + libm::exp(-2.0 * s.t))
    }

    pub fn curl_norm(&self, s: &SystemState) -> Result<f64> {
        operators::curl_norm(&s.q)
    }

    /// Full record. `x_norm` is measured from `reference` when given.
    pub fn record(&self, s: &SystemState, reference: Option<&SystemState>) -> Result<DiagnosticRecord> {
        let e = self.lyapunov_e(s)?;
        let gv = self.func_g(s)?;
        let x_norm = match reference {
            Some(r) => self.x_norm(&s.difference(r)?)?,
            None => self.x_norm(s)?,
        };
        Ok(DiagnosticRecord {
            t: s.t,
            conserved_total: s.theta.integral() + s.chi.integral(),
            mean_chi: grid::mean(&s.chi),
            mean_v: grid::mean(&s.v),
            x_norm,
            energy_y: self.energy_y(s)?,
            lyap_e: e,
            func_g: gv,
            lyap_h: e + self.cfg.kappa2 * gv,
            dissipation_d: self.dissipation_d(s)?,
            curl_norm: self.curl_norm(s)?,
            trace_residual: grid::trace_defect(&s.chi, &s.xi)?,
        })
    }
}

/// Max over the stream of the gaps to the continuous mean trajectories
/// `⟨χ₀⟩ + ε⟨χ₁⟩(1 − e^{−t/ε})` and `⟨χ₁⟩e^{−t/ε}`.
pub fn mean_trajectory_error(stream: &[DiagnosticRecord], r: &ReferenceMeans, epsilon: f64) -> (f64, f64) {
    stream.iter().fold((0.0f64, 0.0f64), |(ec, ev), rec| {
        let decay = libm::exp(-rec.t / epsilon);
        let chi = r.chi0 + epsilon * r.chi1 * (1.0 - decay);
        let v = r.chi1 * decay;
        (ec.max((rec.mean_chi - chi).abs()), ev.max((rec.mean_v - v).abs()))
    })
}

/// `C₀ = max(1, 10·|ℋ₁ − ℋ₀|/dt)` from the first increment.
pub fn c0_estimate(stream: &[DiagnosticRecord]) -> f64 {
    match stream {
        [a, b, ..] if b.t > a.t => (10.0 * (b.lyap_h - a.lyap_h).abs() / (b.t - a.t)).max(1.0),
        _ => 1.0,
    }
}

/// Increments `ℋ(t_{n+1}) − ℋ(tₙ) − C₀e^{−2tₙ}(t_{n+1} − tₙ)`; positive
/// entries exceed the allowance.
pub fn lyapunov_excess(stream: &[DiagnosticRecord], c0: f64) -> Vec<f64> {
    stream
        .windows(2)
        .map(|w| w[1].lyap_h - w[0].lyap_h - c0 * libm::exp(-2.0 * w[0].t) * (w[1].t - w[0].t))
        .collect()
}

/// Human-readable summary of a preflight report.
pub fn describe(report: &KappaReport) -> String {
    let mut s = format!("lambda1 = {:e}, C_P = {:e}, C_O = {:e}", report.lambda1, report.c_p, report.c_omega);
    for c in &report.constraints {
        s.push_str(&format!("\n  {}: {:e} vs {:e} {}", c.name, c.lhs, c.rhs, if c.holds() { "ok" } else { "FAIL" }));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(g: GridSpec, s: &SystemState) -> Diagnostics {
        let cfg = DiagnosticsConfig { kappa1: 1e-2, kappa2: 1e-2, reference: ReferenceMeans::of(s) };
        Diagnostics::new(g, ModelParams::default_double_well(), 1e-2, cfg).unwrap()
    }

    #[test]
    fn constant_state_values() {
        let g = GridSpec::new(2.0, 1.0, 16, 9).unwrap();
        let s = SystemState::new(
            InteriorField::constant(g, 0.0),
            FluxField::zeros(g),
            InteriorField::constant(g, 1.0),
            InteriorField::zeros(g),
        )
        .unwrap();
        let d = setup(g, &s);
        let y = d.energy_y(&s).unwrap();
        let expect = -0.25 * (g.area() + g.boundary_measure());
        assert!((y - expect).abs() < 1e-12);
        assert!(d.func_g(&s).unwrap().abs() < 1e-14);
        assert!((d.dissipation_d(&s).unwrap() - 1.0).abs() < 1e-14);
        let td = d.tilde_split(&s);
        assert!(grid::norm_l2(&td.chi) == 0.0 && grid::norm_l2(&td.theta) == 0.0);
    }

    #[test]
    fn zero_state_energy() {
        let g = GridSpec::new(2.0, 1.0, 16, 9).unwrap();
        let z = InteriorField::zeros(g);
        let s = SystemState::new(z.clone(), FluxField::zeros(g), z.clone(), z).unwrap();
        let d = setup(g, &s);
        assert_eq!(d.energy_y(&s).unwrap(), 0.0);
        assert_eq!(d.x_norm(&s).unwrap(), 0.0);
        let one = SystemState { theta: InteriorField::constant(g, 1.0), ..s };
        assert!((d.x_norm(&one).unwrap() - libm::sqrt(g.area())).abs() < 1e-13);
    }

    #[test]
    fn preflight_defaults_on_unit_slab() {
        let g = GridSpec::new(1.0, 1.0, 32, 17).unwrap();
        let r = kappa_preflight(&g, 1e-2, 1e-2);
        assert!(r.passed(), "{}", describe(&r));
        assert!(!kappa_preflight(&g, 0.3, 1e-2).passed());
    }

    #[test]
    fn h_minus_e_is_kappa_g() {
        let g = GridSpec::new(2.0, 1.0, 16, 9).unwrap();
        let chi = InteriorField::from_fn(g, |x, y| 0.3 * libm::sin(3.0 * x) * libm::cos(2.0 * y));
        let v = InteriorField::from_fn(g, |x, y| 0.1 * libm::cos(x * y));
        let s = SystemState::new(chi.clone(), FluxField::zeros(g), chi, v).unwrap();
        let d = setup(g, &s);
        let h = d.lyap_h(&s).unwrap();
        let e = d.lyapunov_e(&s).unwrap();
        let gv = d.func_g(&s).unwrap();
        assert!((h - e - 1e-2 * gv).abs() < 1e-14 * h.abs().max(1.0));
    }
}
