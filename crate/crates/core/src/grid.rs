//! Slab geometry, field storage and quadrature.
//!
//! The domain is `Ω = [0, Lx) × [0, Ly]`, periodic in `x`, with the boundary
//! `Γ` made of the two lines `y = 0` and `y = Ly`. Nodes sit at
//! `(i·dx, j·dy)` with `dx = Lx/nx` and `dy = Ly/(ny − 1)`; there is no
//! duplicated seam column. Interior samples are stored row-major, `x` fastest.
//!
//! Quadrature is the trapezoid rule in `y` times the uniform sum in `x`, so
//! every rule integrates constants exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Validated constructor. `nx` must be even and at least 4; `ny` must be
    /// at least 4 because the wall normal derivative uses a four-point stencil.
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            return Err(Error::InvalidGrid(format!("lengths must be positive, got Lx={lx}, Ly={ly}")));
        }
        if nx < 4 || nx % 2 != 0 {
            return Err(Error::InvalidGrid(format!("nx must be even and >= 4, got {nx}")));
        }
        if ny < 4 {
            return Err(Error::InvalidGrid(format!("ny must be >= 4, got {ny}")));
        }
        Ok(Self { lx, ly, nx, ny })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    /// `|Ω|`
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// `|Γ|`, both boundary lines.
    pub fn boundary_measure(&self) -> f64 {
        2.0 * self.lx
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }

    /// Trapezoid weight of row `j`, without the `dx` factor.
    #[inline]
    pub fn row_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny - 1 {
            0.5 * self.dy()
        } else {
            self.dy()
        }
    }

    pub fn is_wall(&self, j: usize) -> bool {
        j == 0 || j == self.ny - 1
    }
}

/// Scalar samples over the slab.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl InteriorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    pub fn from_vec(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[j * nx..(j + 1) * nx]
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self + a·other`
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        check(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Quadrature of the field over `Ω`.
    pub fn integral(&self) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for j in 0..g.ny {
            let s: f64 = self.row(j).iter().sum();
            total += g.row_weight(j) * s;
        }
        total * g.dx()
    }
}

/// Samples on the two boundary lines `y = 0` (bottom) and `y = Ly` (top).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    grid: GridSpec,
    pub bottom: Vec<f64>,
    pub top: Vec<f64>,
}

impl BoundaryField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self { grid, bottom: vec![c; grid.nx], top: vec![c; grid.nx] }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64) -> f64) -> Self {
        let bottom: Vec<f64> = (0..grid.nx).map(|i| f(grid.x(i))).collect();
        Self { grid, top: bottom.clone(), bottom }
    }

    pub fn from_parts(grid: GridSpec, bottom: Vec<f64>, top: Vec<f64>) -> Result<Self> {
        if bottom.len() != grid.nx || top.len() != grid.nx {
            return Err(Error::InvalidGrid(format!("boundary lines must hold {} samples", grid.nx)));
        }
        Ok(Self { grid, bottom, top })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            bottom: self.bottom.iter().map(|&v| f(v)).collect(),
            top: self.top.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        check(&self.grid, &other.grid)?;
        let comb = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + a * q).collect();
        Ok(Self {
            grid: self.grid,
            bottom: comb(&self.bottom, &other.bottom),
            top: comb(&self.top, &other.top),
        })
    }

    pub fn lines(&self) -> [&[f64]; 2] {
        [&self.bottom, &self.top]
    }

    pub fn is_finite(&self) -> bool {
        self.bottom.iter().chain(&self.top).all(|v| v.is_finite())
    }
}

/// Heat flux `q = (qx, qy)` on the staggered (cell-face) layout.
///
/// `qx[idx(i, j)]` sits at `(x_i + dx/2, y_j)` and `qy[idx(i, j)]` at
/// `(x_i, y_j + dy/2)`. Only `ny − 1` vertical faces exist, so the last row of
/// `qy` would lie outside the slab and must be zero. No face crosses a wall,
/// which makes `q·ν = 0` structural; operators that consume a flux check the
/// unused row.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    grid: GridSpec,
    pub qx: Vec<f64>,
    pub qy: Vec<f64>,
}

impl FluxField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, qx: vec![0.0; grid.len()], qy: vec![0.0; grid.len()] }
    }

    /// Samples `qx` and `qy` at their face centres; the unused last row of
    /// `qy` stays zero.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> (f64, f64)) -> Self {
        let mut q = Self::zeros(grid);
        let (hx, hy) = (0.5 * grid.dx(), 0.5 * grid.dy());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let k = grid.idx(i, j);
                q.qx[k] = f(grid.x(i) + hx, grid.y(j)).0;
                if j + 1 < grid.ny {
                    q.qy[k] = f(grid.x(i), grid.y(j) + hy).1;
                }
            }
        }
        q
    }

    pub fn from_parts(grid: GridSpec, qx: Vec<f64>, qy: Vec<f64>) -> Result<Self> {
        if qx.len() != grid.len() || qy.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("flux components must hold {} samples", grid.len())));
        }
        Ok(Self { grid, qx, qy })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Row index and largest `|qy|` on the row that has no face.
    pub fn wall_violation(&self) -> (usize, f64) {
        let g = &self.grid;
        let j = g.ny - 1;
        let mut worst = 0.0f64;
        for i in 0..g.nx {
            let v = self.qy[g.idx(i, j)].abs();
            if v > worst || v.is_nan() {
                worst = v;
            }
        }
        (j, worst)
    }

    pub fn check_wall(&self) -> Result<()> {
        let (row, value) = self.wall_violation();
        if value == 0.0 {
            Ok(())
        } else {
            Err(Error::WallCondition { row, value })
        }
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        check(&self.grid, &other.grid)?;
        let comb = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + a * q).collect();
        Ok(Self { grid: self.grid, qx: comb(&self.qx, &other.qx), qy: comb(&self.qy, &other.qy) })
    }

    pub fn is_finite(&self) -> bool {
        self.qx.iter().chain(&self.qy).all(|v| v.is_finite())
    }
}

#[inline]
pub(crate) fn check(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `⟨u⟩ = |Ω|⁻¹ ∫_Ω u`
pub fn mean(u: &InteriorField) -> f64 {
    u.integral() / u.grid().area()
}

/// Weighted sum of `a·b` with the interior quadrature.
pub(crate) fn weighted_dot(g: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let nx = g.nx;
    let mut total = 0.0;
    for j in 0..g.ny {
        let r = j * nx..(j + 1) * nx;
        let s: f64 = a[r.clone()].iter().zip(&b[r]).map(|(x, y)| x * y).sum();
        total += g.row_weight(j) * s;
    }
    total * g.dx()
}

pub fn inner_l2(u: &InteriorField, w: &InteriorField) -> Result<f64> {
    check(u.grid(), w.grid())?;
    Ok(weighted_dot(u.grid(), u.values(), w.values()))
}

pub fn norm_l2(u: &InteriorField) -> f64 {
    libm::sqrt(weighted_dot(u.grid(), u.values(), u.values()))
}

fn face_dot(g: &GridSpec, p: &FluxField, q: &FluxField) -> f64 {
    let n = g.nx * (g.ny - 1);
    let sy: f64 = p.qy[..n].iter().zip(&q.qy[..n]).map(|(a, b)| a * b).sum();
    weighted_dot(g, &p.qx, &q.qx) + sy * g.dx() * g.dy()
}

/// `(p, q)` for vector fields: `qx` faces carry the trapezoid weight of their
/// row, `qy` faces the full cell `dx·dy`.
pub fn inner_flux(p: &FluxField, q: &FluxField) -> Result<f64> {
    check(p.grid(), q.grid())?;
    Ok(face_dot(p.grid(), p, q))
}

pub fn norm_flux(q: &FluxField) -> f64 {
    libm::sqrt(face_dot(q.grid(), q, q))
}

/// `∫_Γ b dS`, summed over both lines.
pub fn boundary_integral(b: &BoundaryField) -> f64 {
    let s: f64 = b.bottom.iter().sum::<f64>() + b.top.iter().sum::<f64>();
    s * b.grid().dx()
}

pub fn inner_gamma(a: &BoundaryField, b: &BoundaryField) -> Result<f64> {
    check(a.grid(), b.grid())?;
    let s: f64 = a.bottom.iter().zip(&b.bottom).map(|(x, y)| x * y).sum::<f64>()
        + a.top.iter().zip(&b.top).map(|(x, y)| x * y).sum::<f64>();
    Ok(s * a.grid().dx())
}

pub fn norm_gamma(b: &BoundaryField) -> f64 {
    libm::sqrt(inner_gamma(b, b).unwrap_or(0.0))
}

/// Centered periodic difference of a line.
pub(crate) fn periodic_centered(line: &[f64], dx: f64, out: &mut [f64]) {
    let n = line.len();
    for i in 0..n {
        let ip = if i + 1 == n { 0 } else { i + 1 };
        let im = if i == 0 { n - 1 } else { i - 1 };
        out[i] = (line[ip] - line[im]) / (2.0 * dx);
    }
}

/// `‖∇u‖²` with centered differences, periodic in `x` and one-sided
/// second-order at the walls. Used by the graph norm; energies use the
/// Dirichlet form of [`crate::operators::dirichlet_form`] instead.
pub(crate) fn gradient_sq_centered(u: &InteriorField) -> f64 {
    let g = u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let mut gx = vec![0.0; nx];
    let mut total = 0.0;
    for j in 0..ny {
        periodic_centered(u.row(j), dx, &mut gx);
        let mut s = 0.0;
        for i in 0..nx {
            let uy = if j == 0 {
                (-3.0 * u.at(i, 0) + 4.0 * u.at(i, 1) - u.at(i, 2)) / (2.0 * dy)
            } else if j == ny - 1 {
                (3.0 * u.at(i, ny - 1) - 4.0 * u.at(i, ny - 2) + u.at(i, ny - 3)) / (2.0 * dy)
            } else {
                (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * dy)
            };
            s += gx[i] * gx[i] + uy * uy;
        }
        total += g.row_weight(j) * s;
    }
    total * dx
}

pub(crate) fn surface_gradient_sq_centered(b: &BoundaryField) -> f64 {
    let dx = b.grid().dx();
    let mut d = vec![0.0; b.grid().nx];
    let mut total = 0.0;
    for line in b.lines() {
        periodic_centered(line, dx, &mut d);
        total += d.iter().map(|v| v * v).sum::<f64>();
    }
    total * dx
}

/// Graph norm of the pair `(χ, ξ)`:
/// `sqrt(‖χ‖² + ‖∇χ‖² + ‖ξ‖²_Γ + ‖∇_Γ ξ‖²_Γ)`.
///
/// The pair is not required to satisfy `ξ = χ|_Γ`; see [`trace_defect`].
pub fn pair_h1_norm(chi: &InteriorField, xi: &BoundaryField) -> Result<f64> {
    check(chi.grid(), xi.grid())?;
    let sq = weighted_dot(chi.grid(), chi.values(), chi.values())
        + gradient_sq_centered(chi)
        + inner_gamma(xi, xi)?
        + surface_gradient_sq_centered(xi);
    Ok(libm::sqrt(sq))
}

/// Largest `|ξ − χ|_Γ|`.
pub fn trace_defect(chi: &InteriorField, xi: &BoundaryField) -> Result<f64> {
    check(chi.grid(), xi.grid())?;
    let g = chi.grid();
    let mut worst = 0.0f64;
    for i in 0..g.nx {
        worst = worst.max((xi.bottom[i] - chi.at(i, 0)).abs());
        worst = worst.max((xi.top[i] - chi.at(i, g.ny - 1)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn grid(lx: f64, ly: f64, nx: usize, ny: usize) -> GridSpec {
        GridSpec::new(lx, ly, nx, ny).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, 1.0, 5, 9).is_err());
        assert!(GridSpec::new(1.0, 1.0, 2, 9).is_err());
        assert!(GridSpec::new(1.0, 1.0, 8, 3).is_err());
        assert!(GridSpec::new(0.0, 1.0, 8, 9).is_err());
        assert!(GridSpec::new(1.0, f64::NAN, 8, 9).is_err());
    }

    #[test]
    fn measures() {
        let g = grid(3.0, 2.0, 8, 5);
        assert_eq!(g.area(), 6.0);
        assert_eq!(g.boundary_measure(), 6.0);
    }

    #[test]
    fn mean_examples() {
        let g = grid(1.5, 2.0, 16, 9);
        assert_eq!(mean(&InteriorField::constant(g, 2.5)), 2.5);
        let c = InteriorField::from_fn(g, |x, _| libm::cos(2.0 * PI * x / 1.5));
        assert!(mean(&c).abs() < 1e-15);
        let lin = InteriorField::from_fn(g, |_, y| y);
        assert!((mean(&lin) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_examples() {
        let g = grid(1.0, 2.0, 8, 5);
        let one = InteriorField::constant(g, 1.0);
        assert!((inner_l2(&one, &one).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(norm_l2(&InteriorField::zeros(g)), 0.0);
        let c = InteriorField::from_fn(g, |x, _| libm::cos(2.0 * PI * x));
        let s = InteriorField::from_fn(g, |x, _| libm::sin(2.0 * PI * x));
        assert!(inner_l2(&c, &s).unwrap().abs() < 1e-15);
        let other = InteriorField::zeros(grid(1.0, 2.0, 8, 6));
        assert_eq!(inner_l2(&one, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn boundary_examples() {
        let g = grid(3.0, 1.0, 12, 5);
        assert!((boundary_integral(&BoundaryField::constant(g, 1.0)) - 6.0).abs() < 1e-14);
        let c = BoundaryField::from_fn(g, |x| libm::cos(2.0 * PI * x / 3.0));
        assert!(boundary_integral(&c).abs() < 1e-14);
        let k = BoundaryField::constant(g, -0.7);
        assert!((boundary_integral(&k) + 0.7 * g.boundary_measure()).abs() < 1e-14);
    }

    #[test]
    fn pair_norm_examples() {
        let g = grid(1.0, 1.0, 16, 9);
        let z = pair_h1_norm(&InteriorField::zeros(g), &BoundaryField::zeros(g)).unwrap();
        assert_eq!(z, 0.0);
        let n = pair_h1_norm(&InteriorField::constant(g, 1.0), &BoundaryField::constant(g, 1.0)).unwrap();
        assert!((n - (g.area() + g.boundary_measure()).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn pair_norm_cosine_second_order() {
        // interior part of the norm only: ξ = 0
        let err = |nx: usize| {
            let g = grid(1.0, 1.0, nx, nx / 2 + 1);
            let chi = InteriorField::from_fn(g, |x, _| libm::cos(2.0 * PI * x));
            let n = pair_h1_norm(&chi, &BoundaryField::zeros(g)).unwrap();
            // ‖cos‖² = |Ω|/2 analytically
            let exact = 0.5 * (1.0 + 4.0 * PI * PI);
            (n * n - exact).abs()
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e1 < 0.5, "{e1}");
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn flux_wall_check() {
        let g = grid(1.0, 1.0, 8, 5);
        let q = FluxField::from_fn(g, |_, _| (1.0, 1.0));
        assert!(q.check_wall().is_ok());
        let mut bad = q.clone();
        bad.qy[g.idx(3, 4)] = 0.5;
        assert_eq!(bad.check_wall(), Err(Error::WallCondition { row: 4, value: 0.5 }));
        let n = norm_flux(&FluxField::from_fn(g, |_, _| (1.0, 1.0)));
        assert!((n * n - 2.0 * g.area()).abs() < 1e-13);
    }
}
