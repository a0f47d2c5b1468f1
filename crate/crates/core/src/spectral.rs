//! Transform between physical rows and per-wavenumber `y`-columns.
//!
//! Real rows only need the half spectrum `k = 0..=nx/2`; column `k` holds the
//! `ny` coefficients of that wavenumber, bottom to top.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::Fft;
use crate::grid::GridSpec;

#[derive(Debug, Clone)]
pub(crate) struct SlabTransform {
    grid: GridSpec,
    fft: Fft,
}

impl SlabTransform {
    pub(crate) fn new(grid: GridSpec) -> Self {
        Self { grid, fft: Fft::new(grid.nx) }
    }

    pub(crate) fn modes(&self) -> usize {
        self.grid.nx / 2 + 1
    }

    /// Eigenvalue of the periodic three-point `−∂xx` for wavenumber `k`.
    pub(crate) fn lambda_x(&self, k: usize) -> f64 {
        x_eigenvalue(&self.grid, k)
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let modes = self.modes();
        let mut out = vec![Complex64::new(0.0, 0.0); modes * ny];
        let mut row = vec![Complex64::new(0.0, 0.0); nx];
        let mut scratch = Vec::new();
        for j in 0..ny {
            for (dst, &v) in row.iter_mut().zip(&values[j * nx..(j + 1) * nx]) {
                *dst = Complex64::new(v, 0.0);
            }
            self.fft.forward(&mut row, &mut scratch);
            for k in 0..modes {
                out[k * ny + j] = row[k];
            }
        }
        out
    }

    pub(crate) fn inverse(&self, spec: &[Complex64], values: &mut [f64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let modes = self.modes();
        let mut row = vec![Complex64::new(0.0, 0.0); nx];
        let mut scratch = Vec::new();
        for j in 0..ny {
            for k in 0..modes {
                row[k] = spec[k * ny + j];
            }
            // the DC and Nyquist coefficients of a real row are real
            row[0].im = 0.0;
            row[nx / 2].im = 0.0;
            for k in 1..nx / 2 {
                row[nx - k] = row[k].conj();
            }
            self.fft.inverse(&mut row, &mut scratch);
            for (dst, v) in values[j * nx..(j + 1) * nx].iter_mut().zip(&row) {
                *dst = v.re;
            }
        }
    }
}

pub(crate) fn x_eigenvalue(grid: &GridSpec, k: usize) -> f64 {
    let s = libm::sin(PI * k as f64 / grid.nx as f64);
    4.0 * s * s / (grid.dx() * grid.dx())
}

/// Solves a real system on the real and imaginary parts of a complex column.
pub(crate) fn solve_complex(lu: &crate::banded::BandedLu, col: &mut [Complex64], re: &mut Vec<f64>, im: &mut Vec<f64>) {
    re.clear();
    im.clear();
    re.extend(col.iter().map(|c| c.re));
    im.extend(col.iter().map(|c| c.im));
    lu.solve(re);
    lu.solve(im);
    for (c, (a, b)) in col.iter_mut().zip(re.iter().zip(im.iter())) {
        *c = Complex64::new(*a, *b);
    }
}
