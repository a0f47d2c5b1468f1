//! Stationary problem, the functional `Υ`, its gradient and decay fits.
//!
//! The discrete stationary system is the lumped weak form
//!
//! ```text
//! A_N χ + f(χ) + B(−Δ_Γ ξ + g(ξ)) = μ,   ξ = trace χ,   ⟨χ⟩ = m
//! ```
//!
//! at every node, with `B = 2/dy` on wall rows. Integrating against the
//! trapezoid weights kills `A_N χ` and `Δ_Γ ξ`, so any solution satisfies
//! `μ|Ω| = ∫f(χ) + ∫_Γ g(ξ)` exactly.
//!
//! Newton works on the unknowns ordered so that the periodic `x`-coupling is
//! banded: columns are visited as `0, nx−1, 1, nx−2, …`, which places every
//! periodic neighbour at most two columns away. The scalar `μ` and the mean
//! row are eliminated by bordering.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::grid::{self, check, BoundaryField, FluxField, GridSpec, InteriorField};
use crate::integrator::SystemState;
use crate::model::ModelParams;
use crate::operators::{self, y_neumann_entry, Closure};

/// `½‖∇u‖² + ½‖∇_Γ v‖²_Γ + ∫F(u + shift) + ∫_Γ G(v + shift)` for mean-free `u`.
pub fn upsilon(u: &InteriorField, v: &BoundaryField, shift: f64, p: &ModelParams) -> Result<f64> {
    check(u.grid(), v.grid())?;
    let m = grid::mean(u);
    if m.abs() > 1e-10 {
        return Err(Error::NonZeroMean { mean: m, tol: 1e-10 });
    }
    Ok(0.5 * operators::dirichlet_form(u)
        + 0.5 * operators::surface_dirichlet_form(v)
        + u.map(|c| p.f.potential_eval(c + shift)).integral()
        + grid::boundary_integral(&v.map(|c| p.g.potential_eval(c + shift))))
}

/// Strong form of the gradient of `Υ`:
/// `(P₀(−Δu + f̂(u)), −Δ_Γ v + ∂_ν u + ĝ(v))`, with `−Δu` closed by `v`.
///
/// Paired as `(a, w) + (b, trace w)_Γ` with a mean-free `w` and `v = trace u`
/// this is the exact derivative of [`upsilon`] in direction `(w, trace w)`.
pub fn gradient_m(u: &InteriorField, v: &BoundaryField, shift: f64, p: &ModelParams) -> Result<(InteriorField, BoundaryField)> {
    check(u.grid(), v.grid())?;
    let a = operators::apply_a(u, Closure::Trace(v))?;
    let x = InteriorField::from_vec(
        *u.grid(),
        a.values().iter().zip(u.values()).map(|(a, c)| a + p.f.eval(c + shift)).collect(),
    )?;
    let x = x.shift(-grid::mean(&x));
    let lb = operators::laplace_beltrami(v);
    let dn = operators::normal_derivative(u);
    let gb = v.map(|c| p.g.eval(c + shift));
    let b = lb.map(|c| -c).axpy(1.0, &dn)?.axpy(1.0, &gb)?;
    Ok((x, b))
}

/// Riesz representative of the gradient in the lumped inner product:
/// `P₀(a + (2/dy)·b)` with `b` added on the wall rows.
pub fn lumped_gradient(a: &InteriorField, b: &BoundaryField) -> Result<InteriorField> {
    check(a.grid(), b.grid())?;
    let g = *a.grid();
    let s = 2.0 / g.dy();
    let mut out = a.clone();
    let vals = out.values_mut();
    let top = g.idx(0, g.ny - 1);
    for i in 0..g.nx {
        vals[i] += s * b.bottom[i];
        vals[top + i] += s * b.top[i];
    }
    let m = grid::mean(&out);
    Ok(out.shift(-m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub chi_inf: InteriorField,
    pub xi_inf: BoundaryField,
    pub theta_inf: f64,
    pub mu_inf: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl Equilibrium {
    /// `(θ∞, 0, χ∞, ξ∞, 0)`.
    pub fn to_state(&self) -> SystemState {
        let g = *self.chi_inf.grid();
        SystemState {
            theta: InteriorField::constant(g, self.theta_inf),
            q: FluxField::zeros(g),
            chi: self.chi_inf.clone(),
            xi: self.xi_inf.clone(),
            v: InteriorField::zeros(g),
            t: 0.0,
            steps: 0,
        }
    }

    /// `⟨f(χ∞)⟩ + |Ω|⁻¹∫_Γ g(ξ∞)`.
    pub fn mu_identity(&self, p: &ModelParams) -> f64 {
        let g = self.chi_inf.grid();
        grid::mean(&self.chi_inf.map(|c| p.f.eval(c)))
            + grid::boundary_integral(&self.xi_inf.map(|c| p.g.eval(c))) / g.area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Pseudo time step of the gradient-flow fallback.
    pub flow_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 200, max_halvings: 30, flow_step: 1.0 }
    }
}

struct Layout {
    grid: GridSpec,
    pos: Vec<usize>,
    col: Vec<usize>,
}

impl Layout {
    fn new(grid: GridSpec) -> Self {
        let nx = grid.nx;
        let mut col = Vec::with_capacity(nx);
        for k in 0..nx / 2 {
            col.push(k);
            col.push(nx - 1 - k);
        }
        let mut pos = vec![0; nx];
        for (p, &i) in col.iter().enumerate() {
            pos[i] = p;
        }
        Self { grid, pos, col }
    }

    fn unknown(&self, i: usize, j: usize) -> usize {
        self.pos[i] * self.grid.ny + j
    }

    fn node(&self, r: usize) -> (usize, usize) {
        (self.col[r / self.grid.ny], r % self.grid.ny)
    }

    fn to_unknowns(&self, u: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let mut out = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                out[self.unknown(i, j)] = u[g.idx(i, j)];
            }
        }
        out
    }

    fn from_unknowns(&self, x: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let mut out = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                out[g.idx(i, j)] = x[self.unknown(i, j)];
            }
        }
        out
    }

    /// Factor `A_N + B(−Δ_Γ) + diag(d)`.
    fn factor(&self, diag: &[f64]) -> Result<BandedLu> {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let h2 = g.dx() * g.dx();
        let b = 2.0 / g.dy();
        let band = 2 * ny;
        BandedLu::factor(g.len(), band, band, |r, c| {
            let (i, j) = self.node(r);
            let (i2, j2) = self.node(c);
            let mut e = 0.0;
            if i == i2 {
                e += y_neumann_entry(&g, j, j2);
            }
            if j == j2 {
                let wall = if j == 0 || j == ny - 1 { 1.0 + b } else { 1.0 };
                if i == i2 {
                    e += wall * 2.0 / h2 + diag[g.idx(i, j)];
                } else if i2 == (i + 1) % nx || i == (i2 + 1) % nx {
                    e -= wall / h2;
                }
            }
            e
        })
        .map_err(|e| match e {
            Error::SingularBand { .. } => Error::SingularJacobian,
            e => e,
        })
    }
}

struct Residual {
    r: InteriorField,
    norm: f64,
}

fn residual(chi: &InteriorField, mu: f64, m: f64, p: &ModelParams) -> Result<Residual> {
    let g = *chi.grid();
    let (nx, ny) = (g.nx, g.ny);
    let b = 2.0 / g.dy();
    let xi = operators::trace(chi);
    let lb = operators::laplace_beltrami(&xi);
    let mut r = operators::apply_a(chi, Closure::Neumann)?;
    let top = g.idx(0, ny - 1);
    {
        let vals = r.values_mut();
        for (x, c) in vals.iter_mut().zip(chi.values()) {
            *x += p.f.eval(*c) - mu;
        }
        for i in 0..nx {
            vals[i] += b * (-lb.bottom[i] + p.g.eval(xi.bottom[i]));
            vals[top + i] += b * (-lb.top[i] + p.g.eval(xi.top[i]));
        }
    }
    // interior rows in L², wall rows as a boundary residual (times dy/2)
    let mut inner = r.clone();
    let mut wall = BoundaryField::zeros(g);
    {
        let vals = inner.values_mut();
        for i in 0..nx {
            wall.bottom[i] = vals[i] / b;
            wall.top[i] = vals[top + i] / b;
            vals[i] = 0.0;
            vals[top + i] = 0.0;
        }
    }
    let norm = grid::norm_l2(&inner) + grid::norm_gamma(&wall) + (grid::mean(chi) - m).abs();
    Ok(Residual { r, norm })
}

/// Joint residual norm of `(χ, μ)` for the stationary system with mean `m`:
/// interior rows in L², wall rows in the boundary norm, plus the mean defect.
pub fn stationary_residual(chi: &InteriorField, mu: f64, m: f64, p: &ModelParams) -> Result<f64> {
    residual(chi, mu, m, p).map(|r| r.norm)
}

/// Damped Newton for the stationary problem with `⟨χ⟩ = constraint_mean`.
/// The boundary values follow from `ξ = trace χ`, so only `χ` is seeded.
pub fn solve_stationary(
    seed: &InteriorField,
    constraint_mean: f64,
    theta_inf: f64,
    p: &ModelParams,
    opts: &NewtonOptions,
) -> Result<Equilibrium> {
    let g = *seed.grid();
    let layout = Layout::new(g);
    let n = g.len();
    let b = 2.0 / g.dy();
    let weights: Vec<f64> = (0..n).map(|k| g.row_weight(k / g.nx) * g.dx() / g.area()).collect();
    let wmean = |x: &[f64]| -> f64 { x.iter().zip(&weights).map(|(a, w)| a * w).sum() };

    let mut chi = seed.clone();
    let mut mu = grid::mean(&chi.map(|c| p.f.eval(c)))
        + grid::boundary_integral(&operators::trace(&chi).map(|c| p.g.eval(c))) / g.area();
    let mut res = residual(&chi, mu, constraint_mean, p)?;
    let mut iterations = 0;
    while res.norm > opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::MaxIterations { iterations, residual: res.norm });
        }
        iterations += 1;
        let mut diag: Vec<f64> = chi.values().iter().map(|c| p.f.prime(*c)).collect();
        for i in 0..g.nx {
            diag[g.idx(i, 0)] += b * p.g.prime(chi.at(i, 0));
            diag[g.idx(i, g.ny - 1)] += b * p.g.prime(chi.at(i, g.ny - 1));
        }
        let step = match layout.factor(&diag) {
            Ok(lu) => {
                let mut y1 = layout.to_unknowns(&res.r.values().iter().map(|x| -x).collect::<Vec<_>>());
                let mut y2 = vec![1.0; n];
                lu.solve(&mut y1);
                lu.solve(&mut y2);
                let y1 = layout.from_unknowns(&y1);
                let y2 = layout.from_unknowns(&y2);
                let m2 = wmean(&y2);
                if m2.abs() < 1e-300 || !m2.is_finite() {
                    None
                } else {
                    let dmu = (constraint_mean - grid::mean(&chi) - wmean(&y1)) / m2;
                    let d: Vec<f64> = y1.iter().zip(&y2).map(|(a, c)| a + dmu * c).collect();
                    Some((d, dmu))
                }
            }
            Err(Error::SingularJacobian) => None,
            Err(e) => return Err(e),
        };
        let mut accepted = false;
        if let Some((d, dmu)) = step {
            let mut lam = 1.0;
            for _ in 0..=opts.max_halvings {
                let trial = InteriorField::from_vec(g, chi.values().iter().zip(&d).map(|(c, x)| c + lam * x).collect())?;
                let tr = residual(&trial, mu + lam * dmu, constraint_mean, p)?;
                if tr.norm.is_finite() && tr.norm <= (1.0 - 1e-4 * lam) * res.norm {
                    chi = trial;
                    mu += lam * dmu;
                    res = tr;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
        }
        if !accepted {
            // gradient-flow step on Υ with the mean projected out
            let mut tau = opts.flow_step;
            let cshift = p.f.poly().derivative().global_min().map_or(0.0, |m| (-m).max(0.0));
            for _ in 0..=opts.max_halvings {
                let diag = vec![1.0 / tau + cshift; n];
                let lu = layout.factor(&diag)?;
                let pr = res.r.shift(-grid::mean(&res.r));
                let mut d = layout.to_unknowns(&pr.values().iter().map(|x| -x).collect::<Vec<_>>());
                lu.solve(&mut d);
                let d = layout.from_unknowns(&d);
                let fix = constraint_mean - grid::mean(&chi) - wmean(&d);
                let trial = InteriorField::from_vec(g, chi.values().iter().zip(&d).map(|(c, x)| c + x + fix).collect())?;
                let tmu = grid::mean(&trial.map(|c| p.f.eval(c)))
                    + grid::boundary_integral(&operators::trace(&trial).map(|c| p.g.eval(c))) / g.area();
                let tr = residual(&trial, tmu, constraint_mean, p)?;
                if tr.norm.is_finite() && tr.norm < res.norm {
                    chi = trial;
                    mu = tmu;
                    res = tr;
                    accepted = true;
                    break;
                }
                tau *= 0.5;
            }
        }
        if !accepted {
            return Err(Error::MaxIterations { iterations, residual: res.norm });
        }
    }
    let xi = operators::trace(&chi);
    Ok(Equilibrium { chi_inf: chi, xi_inf: xi, theta_inf, mu_inf: mu, residual_norm: res.norm, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    Algebraic,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Exponent of `(1+t)^{−e}` or rate of `e^{−rt}` for the chosen model.
    pub exponent: f64,
    /// `ρ` with `e = ρ/(1 − 2ρ)`, from the algebraic fit.
    pub rho: f64,
    pub r2: f64,
    pub r2_algebraic: f64,
    pub r2_exponential: f64,
    pub algebraic_exponent: f64,
    pub exponential_rate: f64,
    /// Distances are nonincreasing over the window.
    pub monotone: bool,
    pub points: usize,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| {
        let e = b - my - slope * (a - mx);
        e * e
    }).sum();
    (slope, 1.0 - ssr / syy)
}

/// Least-squares fits of `log d` against `log(1+t)` and against `t`.
/// Points with `d ≤ floor` are rejected.
pub fn fit_decay(t: &[f64], d: &[f64], floor: f64) -> Result<DecayFit> {
    if t.len() != d.len() {
        return Err(Error::Fit("time and distance streams differ in length".into()));
    }
    let (mut tt, mut ld) = (Vec::new(), Vec::new());
    for (a, b) in t.iter().zip(d) {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Fit("non-finite sample".into()));
        }
        if *b > floor {
            tt.push(*a);
            ld.push(libm::log(*b));
        }
    }
    if tt.len() < 3 {
        return Err(Error::Fit(format!("window too short: {} points above the floor", tt.len())));
    }
    let spread = ld.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ld.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-8 {
        return Err(Error::Fit("distances are flat (noise floor)".into()));
    }
    let lt: Vec<f64> = tt.iter().map(|x| libm::log1p(*x)).collect();
    let (sa, r2a) = linear_fit(&lt, &ld);
    let (se, r2e) = linear_fit(&tt, &ld);
    let ea = -sa;
    let rho = ea / (1.0 + 2.0 * ea);
    let monotone = ld.windows(2).all(|w| w[1] <= w[0]);
    let (model, exponent, r2) = if r2a >= r2e {
        (DecayModel::Algebraic, ea, r2a)
    } else {
        (DecayModel::Exponential, -se, r2e)
    };
    Ok(DecayFit {
        model,
        exponent,
        rho,
        r2,
        r2_algebraic: r2a,
        r2_exponential: r2e,
        algebraic_exponent: ea,
        exponential_rate: -se,
        monotone,
        points: tt.len(),
    })
}
