//! Initial data for the built-in scenarios.
//!
//! Random perturbations use `ChaCha8Rng::seed_from_u64(seed)`, which is
//! specified bit-for-bit and therefore reproduces across platforms. For every
//! `(k, m)` with `0 ≤ k ≤ kx`, `0 ≤ m ≤ ky`, `(k, m) ≠ (0, 0)`, in row-major
//! order, two coefficients `a, b` are drawn uniformly from `[−1, 1)` and
//!
//! ```text
//! u += cos(mπy/Ly)·(a cos(2πkx/Lx) + b sin(2πkx/Lx))
//! ```
//!
//! The sum is made mean-free in the discrete sense and scaled so that
//! `max |u| = amplitude`.

use std::f64::consts::PI;

use chdyn_core::grid::{self, FluxField, GridSpec, InteriorField};
use chdyn_core::SystemState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ScenarioName, ScenarioSection};
use crate::error::AppError;

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_MODES: [u32; 2] = [3, 3];
pub const DEFAULT_CHI1_MEAN: f64 = 0.2;

/// Band-limited mean-free random field with `max |u| = amplitude`.
pub fn perturbation(g: GridSpec, amplitude: f64, seed: u64, modes: [u32; 2]) -> InteriorField {
    if amplitude == 0.0 {
        return InteriorField::zeros(g);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for k in 0..=modes[0] {
        for m in 0..=modes[1] {
            if k == 0 && m == 0 {
                continue;
            }
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            terms.push((k as f64, m as f64, a, b));
        }
    }
    let u = InteriorField::from_fn(g, |x, y| {
        terms
            .iter()
            .map(|&(k, m, a, b)| {
                let phase = 2.0 * PI * k * x / g.lx;
                (m * PI * y / g.ly).cos() * (a * phase.cos() + b * phase.sin())
            })
            .sum()
    });
    let u = u.shift(-grid::mean(&u));
    let peak = u.values().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if peak == 0.0 {
        u
    } else {
        u.scale(amplitude / peak)
    }
}

/// `A·(cos(πy/Ly), sin(2πx/Lx) sin(πy/Ly))`; rotational, with zero normal
/// component on the walls.
pub fn rotational_flux(g: GridSpec, amplitude: f64) -> FluxField {
    FluxField::from_fn(g, |x, y| {
        let sy = (PI * y / g.ly).sin();
        (amplitude * (PI * y / g.ly).cos(), amplitude * (2.0 * PI * x / g.lx).sin() * sy)
    })
}

pub fn initial_state(g: GridSpec, s: &ScenarioSection) -> Result<SystemState, AppError> {
    let theta = InteriorField::constant(g, s.theta.unwrap_or(0.0));
    let q = match s.flux_amplitude {
        Some(a) if a != 0.0 => rotational_flux(g, a),
        _ => FluxField::zeros(g),
    };
    let seed = s.seed.unwrap_or(DEFAULT_SEED);
    let modes = s.modes.unwrap_or(DEFAULT_MODES);
    let (chi, v) = match s.name {
        ScenarioName::ConstantEquilibrium => (InteriorField::constant(g, s.chi.unwrap_or(1.0)), InteriorField::zeros(g)),
        ScenarioName::Spinodal => {
            let u = perturbation(g, s.amplitude.unwrap_or(0.1), seed, modes);
            (u.shift(s.chi.unwrap_or(0.0)), InteriorField::zeros(g))
        }
        ScenarioName::MeanOde => {
            let u = perturbation(g, s.amplitude.unwrap_or(0.0), seed, modes);
            (u.shift(s.chi.unwrap_or(0.0)), InteriorField::constant(g, s.chi1_mean.unwrap_or(DEFAULT_CHI1_MEAN)))
        }
    };
    Ok(SystemState::new(theta, q, chi, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chdyn_core::operators;

    fn g() -> GridSpec {
        GridSpec::new(4.0, 2.0, 16, 9).unwrap()
    }

    #[test]
    fn perturbation_properties() {
        let u = perturbation(g(), 0.3, 7, [3, 3]);
        assert!(grid::mean(&u).abs() < 1e-15);
        let peak = u.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((peak - 0.3).abs() < 1e-15);
        assert_eq!(u, perturbation(g(), 0.3, 7, [3, 3]));
        assert_ne!(u, perturbation(g(), 0.3, 8, [3, 3]));
    }

    #[test]
    fn flux_is_rotational() {
        let q = rotational_flux(g(), 1.0);
        q.check_wall().unwrap();
        assert!(operators::curl_norm(&q).unwrap() > 0.1);
    }
}
