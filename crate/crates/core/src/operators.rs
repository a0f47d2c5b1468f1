//! Finite-difference operators on the slab and the zero-mean Neumann inverse.
//!
//! Two closures of the Laplacian are used. The Neumann closure mirrors the
//! wall row through a ghost node (`∂_ν u = 0`); with the trapezoid weights it
//! is self-adjoint and every output has zero mean. The trace closure takes the
//! wall values from a boundary field and uses one-sided second-order stencils
//! on the wall rows. On the wall rows the two are related exactly by
//!
//! ```text
//! A_N u = A_trace u + (2/dy) ∂_ν u
//! ```
//!
//! where `∂_ν` is [`normal_derivative`].
//!
//! `grad`, `div` and `curl2d` act on the staggered flux layout of
//! [`FluxField`]: `div` is the negative adjoint of `grad`, `−div ∘ grad` is
//! the Neumann Laplacian, and `curl2d ∘ grad = 0`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::grid::{self, check, BoundaryField, FluxField, GridSpec, InteriorField};
use crate::spectral::{self, SlabTransform};

/// Closure used for the wall rows of `−Δ`.
#[derive(Debug, Clone, Copy)]
pub enum Closure<'a> {
    /// Homogeneous Neumann via a mirrored ghost node.
    Neumann,
    /// Dirichlet values taken from the boundary field.
    Trace(&'a BoundaryField),
}

#[inline]
fn wrap(i: usize, d: isize, n: usize) -> usize {
    ((i as isize + d).rem_euclid(n as isize)) as usize
}

/// Face differences: `qx` at `(i+½, j)`, `qy` at `(i, j+½)`.
pub fn grad(u: &InteriorField) -> FluxField {
    let g = *u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let mut q = FluxField::zeros(g);
    for j in 0..ny {
        for i in 0..nx {
            let k = g.idx(i, j);
            q.qx[k] = (u.at(wrap(i, 1, nx), j) - u.at(i, j)) / dx;
            if j + 1 < ny {
                q.qy[k] = (u.at(i, j + 1) - u.at(i, j)) / dy;
            }
        }
    }
    q
}

/// Negative adjoint of [`grad`]: `(div q, u) = −(q, grad u)` exactly.
/// On the wall rows the single inner face is divided by the half cell.
pub fn div(q: &FluxField) -> Result<InteriorField> {
    q.check_wall()?;
    let g = *q.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let mut out = InteriorField::zeros(g);
    let vals = out.values_mut();
    for j in 0..ny {
        for i in 0..nx {
            let k = g.idx(i, j);
            let dqx = (q.qx[k] - q.qx[g.idx(wrap(i, -1, nx), j)]) / dx;
            let dqy = if j == 0 {
                2.0 * q.qy[k] / dy
            } else if j == ny - 1 {
                -2.0 * q.qy[g.idx(i, j - 1)] / dy
            } else {
                (q.qy[k] - q.qy[g.idx(i, j - 1)]) / dy
            };
            vals[k] = dqx + dqy;
        }
    }
    Ok(out)
}

/// Scalar curl `∂x qy − ∂y qx` at the cell corners `(i+½, j+½)`, stored at
/// `idx(i, j)`; the last row has no corner and is zero.
pub fn curl2d(q: &FluxField) -> Result<InteriorField> {
    q.check_wall()?;
    let g = *q.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let mut out = InteriorField::zeros(g);
    let vals = out.values_mut();
    for j in 0..ny - 1 {
        for i in 0..nx {
            let k = g.idx(i, j);
            let e = g.idx(wrap(i, 1, nx), j);
            vals[k] = (q.qy[e] - q.qy[k]) / dx - (q.qx[g.idx(i, j + 1)] - q.qx[k]) / dy;
        }
    }
    Ok(out)
}

/// `‖curl q‖` with one cell `dx·dy` per corner.
pub fn curl_norm(q: &FluxField) -> Result<f64> {
    let c = curl2d(q)?;
    let g = c.grid();
    let n = g.nx * (g.ny - 1);
    let s: f64 = c.values()[..n].iter().map(|v| v * v).sum();
    Ok(libm::sqrt(s * g.dx() * g.dy()))
}

fn minus_dxx(line: &[f64], dx: f64, out: &mut [f64]) {
    let n = line.len();
    let h2 = dx * dx;
    for i in 0..n {
        out[i] = (2.0 * line[i] - line[wrap(i, -1, n)] - line[wrap(i, 1, n)]) / h2;
    }
}

/// `−Δu` with the requested wall closure.
pub fn apply_a(u: &InteriorField, closure: Closure<'_>) -> Result<InteriorField> {
    let g = *u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let dy2 = dy * dy;
    let mut out = InteriorField::zeros(g);
    let mut xx = vec![0.0; nx];
    match closure {
        Closure::Neumann => {
            let vals = out.values_mut();
            for j in 0..ny {
                minus_dxx(u.row(j), dx, &mut xx);
                for i in 0..nx {
                    let c = u.at(i, j);
                    let yy = if j == 0 {
                        2.0 * (c - u.at(i, 1)) / dy2
                    } else if j == ny - 1 {
                        2.0 * (c - u.at(i, ny - 2)) / dy2
                    } else {
                        (2.0 * c - u.at(i, j - 1) - u.at(i, j + 1)) / dy2
                    };
                    vals[g.idx(i, j)] = xx[i] + yy;
                }
            }
        }
        Closure::Trace(xi) => {
            check(&g, xi.grid())?;
            let at = |i: usize, j: usize| -> f64 {
                if j == 0 {
                    xi.bottom[i]
                } else if j == ny - 1 {
                    xi.top[i]
                } else {
                    u.at(i, j)
                }
            };
            let vals = out.values_mut();
            for j in 0..ny {
                let line: Vec<f64> = (0..nx).map(|i| at(i, j)).collect();
                minus_dxx(&line, dx, &mut xx);
                for i in 0..nx {
                    let yy = if j == 0 {
                        -(2.0 * at(i, 0) - 5.0 * at(i, 1) + 4.0 * at(i, 2) - at(i, 3)) / dy2
                    } else if j == ny - 1 {
                        let n = ny - 1;
                        -(2.0 * at(i, n) - 5.0 * at(i, n - 1) + 4.0 * at(i, n - 2) - at(i, n - 3)) / dy2
                    } else {
                        (2.0 * at(i, j) - at(i, j - 1) - at(i, j + 1)) / dy2
                    };
                    vals[g.idx(i, j)] = xx[i] + yy;
                }
            }
        }
    }
    Ok(out)
}

/// `(A_N u, u)`, the discrete `‖∇u‖²` consistent with the Neumann closure,
/// evaluated as a sum of squared edge differences.
pub fn dirichlet_form(u: &InteriorField) -> f64 {
    let g = u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let mut sx = 0.0;
    for j in 0..ny {
        let row = u.row(j);
        let s: f64 = (0..nx).map(|i| {
            let d = row[wrap(i, 1, nx)] - row[i];
            d * d
        }).sum();
        sx += g.row_weight(j) * s;
    }
    let mut sy = 0.0;
    for j in 0..ny - 1 {
        for i in 0..nx {
            let d = u.at(i, j + 1) - u.at(i, j);
            sy += d * d;
        }
    }
    sx / dx + sy * dx / dy
}

/// `‖∇_Γ b‖²_Γ` from forward differences, `= (−Δ_Γ b, b)_Γ`.
pub fn surface_dirichlet_form(b: &BoundaryField) -> f64 {
    let n = b.grid().nx;
    let dx = b.grid().dx();
    let mut s = 0.0;
    for line in b.lines() {
        for i in 0..n {
            let d = line[wrap(i, 1, n)] - line[i];
            s += d * d;
        }
    }
    s / dx
}

/// Periodic second difference on each boundary line (`Δ_Γ`).
pub fn laplace_beltrami(b: &BoundaryField) -> BoundaryField {
    let g = *b.grid();
    let mut out = BoundaryField::zeros(g);
    let dx = g.dx();
    minus_dxx(&b.bottom, dx, &mut out.bottom);
    minus_dxx(&b.top, dx, &mut out.top);
    out.map(|v| -v)
}

pub fn trace(u: &InteriorField) -> BoundaryField {
    let g = *u.grid();
    BoundaryField::from_parts(g, u.row(0).to_vec(), u.row(g.ny - 1).to_vec())
        .expect("rows have nx samples")
}

/// Outward normal derivative from the one-sided second-order stencil
/// `(4u₀ − 7u₁ + 4u₂ − u₃)/(2dy)`, which is the stencil that makes
/// `A_N = A_trace + (2/dy)∂_ν` hold on the wall rows.
pub fn normal_derivative(u: &InteriorField) -> BoundaryField {
    let g = *u.grid();
    let n = g.ny - 1;
    let h = 2.0 * g.dy();
    let st = |a: f64, b: f64, c: f64, d: f64| (4.0 * a - 7.0 * b + 4.0 * c - d) / h;
    let bottom = (0..g.nx).map(|i| st(u.at(i, 0), u.at(i, 1), u.at(i, 2), u.at(i, 3))).collect();
    let top = (0..g.nx).map(|i| st(u.at(i, n), u.at(i, n - 1), u.at(i, n - 2), u.at(i, n - 3))).collect();
    BoundaryField::from_parts(g, bottom, top).expect("lines have nx samples")
}

/// Smallest nonzero eigenvalue of the discrete `A₀`.
pub fn smallest_eigenvalue(grid: &GridSpec) -> f64 {
    let lx = spectral::x_eigenvalue(grid, 1);
    let s = libm::sin(core::f64::consts::PI / (2.0 * (grid.ny - 1) as f64));
    let ly = 4.0 * s * s / (grid.dy() * grid.dy());
    lx.min(ly)
}

/// Neumann Laplacian in wavenumber form: the `x`-eigenvalues and, for each
/// half-spectrum wavenumber, the tridiagonal `y`-operator.
#[derive(Debug, Clone)]
pub struct NeumannLaplacian {
    grid: GridSpec,
    lambda_x: Vec<f64>,
}

impl NeumannLaplacian {
    pub fn new(grid: GridSpec) -> Self {
        let lambda_x = (0..=grid.nx / 2).map(|k| spectral::x_eigenvalue(&grid, k)).collect();
        Self { grid, lambda_x }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lambda_x(&self, k: usize) -> f64 {
        self.lambda_x[k]
    }

    /// Entry `(r, c)` of `λ_x(k)·I + L_y`, zero outside the tridiagonal band.
    pub fn entry(&self, k: usize, r: usize, c: usize) -> f64 {
        y_neumann_entry(&self.grid, r, c) + if r == c { self.lambda_x[k] } else { 0.0 }
    }
}

pub(crate) fn y_neumann_entry(g: &GridSpec, r: usize, c: usize) -> f64 {
    let n = g.ny - 1;
    let h2 = g.dy() * g.dy();
    if r == c {
        2.0 / h2
    } else if (r == 0 && c == 1) || (r == n && c == n - 1) {
        -2.0 / h2
    } else if r.abs_diff(c) == 1 {
        -1.0 / h2
    } else {
        0.0
    }
}

/// `A₀⁻¹`: Fourier transform in `x`, one tridiagonal solve per wavenumber.
/// The `k = 0` system fixes the bottom value and the zero-mean condition is
/// restored afterwards by subtracting the mean.
#[derive(Debug, Clone)]
pub struct InversePoissonSolver {
    grid: GridSpec,
    transform: SlabTransform,
    factors: Vec<BandedLu>,
}

impl InversePoissonSolver {
    pub fn new(grid: GridSpec) -> Result<Self> {
        let lap = NeumannLaplacian::new(grid);
        let transform = SlabTransform::new(grid);
        let ny = grid.ny;
        let mut factors = Vec::with_capacity(transform.modes());
        for k in 0..transform.modes() {
            let lu = if k == 0 {
                BandedLu::factor(ny, 1, 1, |r, c| {
                    if r == 0 {
                        if c == 0 { 1.0 } else { 0.0 }
                    } else {
                        lap.entry(0, r, c)
                    }
                })?
            } else {
                BandedLu::factor(ny, 1, 1, |r, c| lap.entry(k, r, c))?
            };
            factors.push(lu);
        }
        Ok(Self { grid, transform, factors })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Zero-mean `w` with `A_N w = rhs`. Fails if `rhs` is not mean-free to
    /// `1e−10·‖rhs‖`.
    pub fn solve(&self, rhs: &InteriorField) -> Result<InteriorField> {
        check(&self.grid, rhs.grid())?;
        let m = grid::mean(rhs);
        let tol = 1e-10 * grid::norm_l2(rhs);
        if m.abs() > tol {
            return Err(Error::NonZeroMean { mean: m, tol });
        }
        Ok(self.solve_unchecked(rhs.values()))
    }

    pub(crate) fn solve_unchecked(&self, rhs: &[f64]) -> InteriorField {
        let g = self.grid;
        let ny = g.ny;
        let mut spec = self.transform.forward(rhs);
        let (mut re, mut im) = (Vec::new(), Vec::new());
        for (k, lu) in self.factors.iter().enumerate() {
            let col = &mut spec[k * ny..(k + 1) * ny];
            if k == 0 {
                col[0] = Complex64::new(0.0, 0.0);
            }
            spectral::solve_complex(lu, col, &mut re, &mut im);
        }
        let mut out = InteriorField::zeros(g);
        self.transform.inverse(&spec, out.values_mut());
        let m = grid::mean(&out);
        for v in out.values_mut() {
            *v -= m;
        }
        out
    }

    /// `(u, A₀⁻¹ w)` for mean-free `u`, `w`.
    pub fn dual_inner(&self, u: &InteriorField, w: &InteriorField) -> Result<f64> {
        let aw = self.solve(w)?;
        grid::inner_l2(u, &aw)
    }

    /// `‖A₀^{-1/2} u‖² = (u, A₀⁻¹u)` for mean-free `u`.
    pub fn dual_norm_sq(&self, u: &InteriorField) -> Result<f64> {
        self.dual_inner(u, u)
    }
}

/// `‖v‖_{V*} = sqrt(‖∇A₀⁻¹(v − ⟨v⟩)‖² + ⟨v⟩²)`.
pub fn vstar_norm(solver: &InversePoissonSolver, u: &InteriorField) -> Result<f64> {
    check(solver.grid(), u.grid())?;
    let m = grid::mean(u);
    let w = solver.solve_unchecked(u.shift(-m).values());
    let gw = grad(&w);
    let n = grid::norm_flux(&gw);
    Ok(libm::sqrt(n * n + m * m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{boundary_integral, inner_flux, inner_l2, mean, norm_flux, norm_l2};
    use core::f64::consts::PI;

    fn grid(lx: f64, ly: f64, nx: usize, ny: usize) -> GridSpec {
        GridSpec::new(lx, ly, nx, ny).unwrap()
    }

    fn smooth(g: GridSpec) -> InteriorField {
        InteriorField::from_fn(g, |x, y| {
            libm::sin(2.0 * PI * x / g.lx) * libm::cos(1.3 * y) + 0.3 * libm::cos(4.0 * PI * x / g.lx + y) + y * y
        })
    }

    #[test]
    fn grad_of_constant_vanishes() {
        let g = grid(1.0, 1.0, 8, 6);
        let q = grad(&InteriorField::constant(g, 3.0));
        assert!(q.qx.iter().chain(&q.qy).all(|v| *v == 0.0));
    }

    #[test]
    fn curl_of_grad_vanishes() {
        let g = grid(2.0, 1.5, 16, 11);
        let c = curl2d(&grad(&smooth(g))).unwrap();
        assert!(norm_l2(&c) < 1e-12);
    }

    #[test]
    fn div_of_x_flux_second_order() {
        let err = |nx: usize| {
            let g = grid(2.0, 1.0, nx, nx / 2 + 1);
            let s = |y: f64| 1.0 + y * y;
            let q = FluxField::from_fn(g, |x, y| (libm::cos(PI * x) * s(y), 0.0));
            let d = div(&q).unwrap();
            let exact = InteriorField::from_fn(g, |x, y| -PI * libm::sin(PI * x) * s(y));
            norm_l2(&d.axpy(-1.0, &exact).unwrap())
        };
        let (a, b) = (err(32), err(64));
        assert!(a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn div_requires_wall_condition() {
        let g = grid(1.0, 1.0, 8, 6);
        let mut q = FluxField::zeros(g);
        q.qy[g.idx(2, 5)] = 1.0;
        assert!(matches!(div(&q), Err(Error::WallCondition { .. })));
        assert!(matches!(curl2d(&q), Err(Error::WallCondition { .. })));
    }

    #[test]
    fn summation_by_parts() {
        let g = grid(1.7, 1.1, 12, 9);
        let u = smooth(g);
        let q = FluxField::from_fn(g, |x, y| (libm::sin(3.0 * x + y), libm::cos(x * y + 0.2)));
        let lhs = inner_l2(&div(&q).unwrap(), &u).unwrap();
        let rhs = -inner_flux(&q, &grad(&u)).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn div_grad_is_neumann_laplacian() {
        let g = grid(1.7, 1.1, 12, 9);
        let u = smooth(g);
        let a = apply_a(&u, Closure::Neumann).unwrap();
        let b = div(&grad(&u)).unwrap();
        assert!(norm_l2(&a.axpy(1.0, &b).unwrap()) < 1e-11 * norm_l2(&a));
    }

    #[test]
    fn grad_second_order_at_faces() {
        let err = |nx: usize| {
            let g = grid(2.0, 1.0, nx, nx / 2 + 1);
            let u = InteriorField::from_fn(g, |x, y| libm::sin(PI * x) * libm::cos(y));
            let q = grad(&u);
            let e = FluxField::from_fn(g, |x, y| (PI * libm::cos(PI * x) * libm::cos(y), -libm::sin(PI * x) * libm::sin(y)));
            norm_flux(&q.axpy(-1.0, &e).unwrap())
        };
        let (a, b) = (err(32), err(64));
        assert!(a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn neumann_eigenfunction() {
        let (lx, ly) = (2.0, 1.0);
        let g = grid(lx, ly, 32, 17);
        let u = InteriorField::from_fn(g, |x, y| libm::cos(2.0 * PI * x / lx) * libm::cos(PI * y / ly));
        let au = apply_a(&u, Closure::Neumann).unwrap();
        let lam = (2.0 * PI / lx).powi(2) + (PI / ly).powi(2);
        let err = norm_l2(&au.axpy(-lam, &u).unwrap()) / norm_l2(&u);
        assert!(err < 0.05 * lam, "{err}");
    }

    #[test]
    fn neumann_output_is_mean_free() {
        let g = grid(1.0, 2.0, 10, 7);
        let au = apply_a(&smooth(g), Closure::Neumann).unwrap();
        assert!(mean(&au).abs() < 1e-12);
        assert!(apply_a(&InteriorField::constant(g, 2.0), Closure::Neumann)
            .unwrap()
            .values()
            .iter()
            .all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn closures_differ_by_normal_derivative() {
        let g = grid(1.3, 0.9, 10, 8);
        let u = smooth(g);
        let xi = trace(&u);
        let an = apply_a(&u, Closure::Neumann).unwrap();
        let at = apply_a(&u, Closure::Trace(&xi)).unwrap();
        let dn = normal_derivative(&u);
        let s = 2.0 / g.dy();
        for i in 0..g.nx {
            assert!((an.at(i, 0) - at.at(i, 0) - s * dn.bottom[i]).abs() < 1e-9);
            assert!((an.at(i, g.ny - 1) - at.at(i, g.ny - 1) - s * dn.top[i]).abs() < 1e-9);
            for j in 1..g.ny - 1 {
                assert!((an.at(i, j) - at.at(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dirichlet_form_matches_operator() {
        let g = grid(1.3, 0.9, 10, 8);
        let u = smooth(g);
        let a = inner_l2(&apply_a(&u, Closure::Neumann).unwrap(), &u).unwrap();
        assert!((a - dirichlet_form(&u)).abs() < 1e-10 * a.abs());
        let b = BoundaryField::from_fn(g, |x| libm::sin(3.0 * x));
        let lb = laplace_beltrami(&b).map(|v| -v);
        let s = crate::grid::inner_gamma(&lb, &b).unwrap();
        assert!((s - surface_dirichlet_form(&b)).abs() < 1e-10 * s.abs());
    }

    #[test]
    fn inverse_examples() {
        let g = grid(1.0, 1.0, 64, 33);
        let rhs = InteriorField::from_fn(g, |x, _| libm::cos(2.0 * PI * x));
        let w = InversePoissonSolver::new(g).unwrap().solve(&rhs).unwrap();
        let exact = rhs.scale(1.0 / (4.0 * PI * PI));
        assert!(norm_l2(&w.axpy(-1.0, &exact).unwrap()) < 1e-4);
        let z = InversePoissonSolver::new(g).unwrap().solve(&InteriorField::zeros(g)).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        let bad = InteriorField::constant(g, 1.0);
        assert!(matches!(InversePoissonSolver::new(g).unwrap().solve(&bad), Err(Error::NonZeroMean { .. })));
    }

    #[test]
    fn vstar_examples() {
        let g = grid(1.0, 1.0, 64, 9);
        let s = InversePoissonSolver::new(g).unwrap();
        assert!((vstar_norm(&s, &InteriorField::constant(g, -1.5)).unwrap() - 1.5).abs() < 1e-13);
        assert_eq!(vstar_norm(&s, &InteriorField::zeros(g)).unwrap(), 0.0);
        let c = InteriorField::from_fn(g, |x, _| libm::cos(2.0 * PI * x));
        let expect = (0.5f64).sqrt() / (2.0 * PI);
        assert!((vstar_norm(&s, &c).unwrap() - expect).abs() < 1e-3 * expect);
    }

    #[test]
    fn laplace_beltrami_examples() {
        let g = grid(2.0, 1.0, 64, 5);
        let b = BoundaryField::from_fn(g, |x| libm::cos(PI * x));
        let lb = laplace_beltrami(&b);
        for (a, v) in lb.bottom.iter().zip(&b.bottom) {
            assert!((a + PI * PI * v).abs() < 1e-2);
        }
        assert!(laplace_beltrami(&BoundaryField::constant(g, 4.0)).bottom.iter().all(|v| v.abs() < 1e-12));
        let r = BoundaryField::from_fn(g, |x| libm::sin(7.1 * x * x));
        assert!(boundary_integral(&laplace_beltrami(&r)).abs() < 1e-11);
    }

    #[test]
    fn normal_derivative_examples() {
        let g = grid(1.0, 1.0, 8, 17);
        let lin = InteriorField::from_fn(g, |_, y| y);
        let d = normal_derivative(&lin);
        assert!(d.bottom.iter().all(|v| (v + 1.0).abs() < 1e-12));
        assert!(d.top.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let c = normal_derivative(&InteriorField::constant(g, 2.0));
        assert!(c.bottom.iter().chain(&c.top).all(|v| v.abs() < 1e-12));
        let cs = normal_derivative(&InteriorField::from_fn(g, |_, y| libm::cos(PI * y)));
        assert!(cs.bottom.iter().chain(&cs.top).all(|v| v.abs() < 2e-2));
        let t = trace(&lin);
        assert!(t.bottom.iter().all(|v| *v == 0.0) && t.top.iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }
}
