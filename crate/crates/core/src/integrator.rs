//! Semi-implicit time stepper.
//!
//! One step advances `(θ, q, χ, ξ, v)` in the order flux, phase, temperature.
//! The phase update is linear in the new velocity `v*` with `χ* = χⁿ + dt·v*`;
//! `f`, `g` and the temperature coupling are frozen at the old level. The
//! boundary equation enters through the lumped weak form: with trapezoid
//! weights, a wall node carries `dy/2` of area, so the surface terms appear on
//! wall rows scaled by `B = 2/dy`. The resulting operator
//!
//! ```text
//! (ε/dt + 1)·I + A_N·(dt·K + α·I + B),   K = A_N + B·(−Δ_Γ)
//! ```
//!
//! commutes with the `x`-transform and is pentadiagonal in `y` for each
//! wavenumber. The factorizations depend only on the grid, the parameters and
//! `dt`, so they are computed once.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::grid::{self, check, BoundaryField, FluxField, GridSpec, InteriorField};
use crate::model::ModelParams;
use crate::operators::{self, y_neumann_entry, Closure};
use crate::spectral::{self, SlabTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub theta: InteriorField,
    pub q: FluxField,
    pub chi: InteriorField,
    pub xi: BoundaryField,
    pub v: InteriorField,
    pub t: f64,
    /// Steps taken since `t = 0`.
    pub steps: u64,
}

impl SystemState {
    /// Builds a state at `t = 0` with `ξ = trace(χ)`.
    pub fn new(theta: InteriorField, q: FluxField, chi: InteriorField, v: InteriorField) -> Result<Self> {
        let g = *chi.grid();
        check(&g, theta.grid())?;
        check(&g, q.grid())?;
        check(&g, v.grid())?;
        q.check_wall()?;
        let xi = operators::trace(&chi);
        Ok(Self { theta, q, chi, xi, v, t: 0.0, steps: 0 })
    }

    pub fn grid(&self) -> &GridSpec {
        self.chi.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.q.is_finite() && self.chi.is_finite() && self.xi.is_finite() && self.v.is_finite()
    }

    /// Componentwise `self − other`; time fields are taken from `self`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            theta: self.theta.axpy(-1.0, &other.theta)?,
            q: self.q.axpy(-1.0, &other.q)?,
            chi: self.chi.axpy(-1.0, &other.chi)?,
            xi: self.xi.axpy(-1.0, &other.xi)?,
            v: self.v.axpy(-1.0, &other.v)?,
            t: self.t,
            steps: self.steps,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Observer cadence in steps.
    pub cadence: u64,
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParams(alloc::format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParams(alloc::format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.cadence == 0 {
            return Err(Error::InvalidParams("cadence must be at least 1".into()));
        }
        Ok(())
    }

    /// Index of the last step, `round(t_end/dt)`.
    pub fn final_step(&self) -> u64 {
        libm::round(self.t_end / self.dt) as u64
    }
}

/// `safety / max(max |f'| on [lo, hi], 1)`. A heuristic for the explicit
/// treatment of `f`, not a stability theorem.
pub fn stability_ceiling(p: &ModelParams, range: (f64, f64), safety: f64) -> f64 {
    let fp = p.f.poly().derivative();
    safety / fp.max_abs_on(range.0, range.1).max(1.0)
}

/// Called with the initial state, then every `cadence` steps and at the end.
pub trait Observer {
    fn observe(&mut self, s: &SystemState) -> Result<()>;
}

impl<F: FnMut(&SystemState) -> Result<()>> Observer for F {
    fn observe(&mut self, s: &SystemState) -> Result<()> {
        self(s)
    }
}

#[derive(Debug, Clone)]
pub struct Stepper {
    grid: GridSpec,
    params: ModelParams,
    dt: f64,
    transform: SlabTransform,
    factors: Vec<BandedLu>,
}

impl Stepper {
    pub fn new(grid: GridSpec, params: ModelParams, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParams(alloc::format!("dt must be positive, got {dt}")));
        }
        let transform = SlabTransform::new(grid);
        let ny = grid.ny;
        let c = params.epsilon / dt + 1.0;
        let b = 2.0 / grid.dy();
        let wall = |r: usize| r == 0 || r == ny - 1;
        let mut factors = Vec::with_capacity(transform.modes());
        for k in 0..transform.modes() {
            let lx = transform.lambda_x(k);
            let t = |r: usize, s: usize| y_neumann_entry(&grid, r, s) + if r == s { lx } else { 0.0 };
            let m = |r: usize, s: usize| {
                let mut e = dt * t(r, s);
                if r == s {
                    e += params.alpha;
                    if wall(r) {
                        e += b * (1.0 + dt * lx);
                    }
                }
                e
            };
            let lu = BandedLu::factor(ny, 2, 2, |r, col| {
                let lo = r.saturating_sub(1);
                let hi = (r + 1).min(ny - 1);
                let mut e = if r == col { c } else { 0.0 };
                for s in lo..=hi {
                    if s.abs_diff(col) <= 1 {
                        e += t(r, s) * m(s, col);
                    }
                }
                e
            })?;
            factors.push(lu);
        }
        Ok(Self { grid, params, dt, transform, factors })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn step(&self, s: &SystemState) -> Result<SystemState> {
        check(&self.grid, s.grid())?;
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let dt = self.dt;
        let p = &self.params;
        let b = 2.0 / g.dy();

        // flux
        let gt = operators::grad(&s.theta);
        let w = 1.0 / (p.sigma + dt);
        let qx: Vec<f64> = s.q.qx.iter().zip(&gt.qx).map(|(q, d)| (p.sigma * q - dt * d) * w).collect();
        let qy: Vec<f64> = s.q.qy.iter().zip(&gt.qy).map(|(q, d)| (p.sigma * q - dt * d) * w).collect();
        let q = FluxField::from_parts(g, qx, qy)?;

        // phase
        let mut kchi = operators::apply_a(&s.chi, Closure::Neumann)?;
        let lb = operators::laplace_beltrami(&s.xi);
        {
            let kv = kchi.values_mut();
            let top = g.idx(0, ny - 1);
            for i in 0..nx {
                kv[i] += b * (-lb.bottom[i] + p.g.eval(s.xi.bottom[i]));
                kv[top + i] += b * (-lb.top[i] + p.g.eval(s.xi.top[i]));
            }
            for (k, (c, th)) in kv.iter_mut().zip(s.chi.values().iter().zip(s.theta.values())) {
                *k += p.f.eval(*c) - th;
            }
        }
        let an = operators::apply_a(&kchi, Closure::Neumann)?;
        let ce = p.epsilon / dt;
        let rhs: Vec<f64> = s.v.values().iter().zip(an.values()).map(|(v, a)| ce * v - a).collect();
        let mut spec = self.transform.forward(&rhs);
        let (mut re, mut im) = (Vec::new(), Vec::new());
        for (k, lu) in self.factors.iter().enumerate() {
            spectral::solve_complex(lu, &mut spec[k * ny..(k + 1) * ny], &mut re, &mut im);
        }
        let mut v = InteriorField::zeros(g);
        self.transform.inverse(&spec, v.values_mut());
        // the mean obeys a scalar recursion; remove the rounding drift of the solve
        let target = grid::mean(&s.v) / (1.0 + dt / p.epsilon);
        let shift = target - grid::mean(&v);
        for x in v.values_mut() {
            *x += shift;
        }
        let chi = s.chi.axpy(dt, &v)?;
        let xi = operators::trace(&chi);

        // temperature
        let dq = operators::div(&q)?;
        let mut theta = s.theta.clone();
        for ((th, d), (cn, co)) in theta
            .values_mut()
            .iter_mut()
            .zip(dq.values())
            .zip(chi.values().iter().zip(s.chi.values()))
        {
            *th -= dt * d + (cn - co);
        }

        let steps = s.steps + 1;
        let out = SystemState { theta, q, chi, xi, v, t: steps as f64 * dt, steps };
        if !out.is_finite() {
            return Err(Error::NonFinite { step: steps });
        }
        Ok(out)
    }

    /// Steps until `steps == cfg.final_step()`, calling `obs` on the input
    /// state, every `cfg.cadence` steps and on the final state.
    pub fn run(&self, s0: SystemState, cfg: &StepperConfig, obs: &mut dyn Observer) -> Result<SystemState> {
        cfg.validate()?;
        let target = cfg.final_step();
        let wrap = |s: &SystemState, e: Error| match e {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep { step: s.steps, t: s.t, source: Box::new(e) },
        };
        obs.observe(&s0).map_err(|e| wrap(&s0, e))?;
        let mut s = s0;
        while s.steps < target {
            s = self.step(&s).map_err(|e| wrap(&s, e))?;
            if s.steps % cfg.cadence == 0 || s.steps == target {
                obs.observe(&s).map_err(|e| wrap(&s, e))?;
            }
        }
        Ok(s)
    }
}

/// Discrete mean of the velocity after `n` steps, `m₀(1 + dt/ε)^{−n}`.
pub fn discrete_mean_v(m0: f64, dt: f64, epsilon: f64, n: u64) -> f64 {
    m0 * libm::pow(1.0 + dt / epsilon, -(n as f64))
}

/// Discrete mean of `χ` after `n` steps: `⟨χ⁰⟩ + ε(⟨v⁰⟩ − ⟨vⁿ⟩)`.
pub fn discrete_mean_chi(chi0: f64, v0: f64, dt: f64, epsilon: f64, n: u64) -> f64 {
    chi0 + epsilon * (v0 - discrete_mean_v(v0, dt, epsilon, n))
}
