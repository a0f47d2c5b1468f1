//! Polynomial nonlinearities `f`, `g`, their potentials and physical
//! parameters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// `y³ − y`.
    pub fn double_well() -> Self {
        Self::new(vec![0.0, -1.0, 0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    /// Value of the derivative at `y`.
    #[inline]
    pub fn eval_prime(&self, y: f64) -> f64 {
        let n = self.coeffs.len();
        let mut acc = 0.0;
        for k in (1..n).rev() {
            acc = acc * y + k as f64 * self.coeffs[k];
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Self {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(0.0);
        c.extend(self.coeffs.iter().enumerate().map(|(k, a)| a / (k + 1) as f64));
        Self::new(c)
    }

    fn cauchy_bound(&self) -> f64 {
        let lead = self.leading().abs();
        let m = self.coeffs[..self.coeffs.len() - 1].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        1.0 + m / lead
    }

    /// All real roots in increasing order (multiple roots may be reported once).
    pub fn real_roots(&self) -> Vec<f64> {
        match self.degree() {
            None | Some(0) => Vec::new(),
            Some(1) => vec![-self.coeffs[0] / self.coeffs[1]],
            Some(_) => {
                let b = self.cauchy_bound();
                let mut knots = vec![-b];
                knots.extend(self.derivative().real_roots());
                knots.push(b);
                let mut roots: Vec<f64> = Vec::new();
                for w in knots.windows(2) {
                    let (a, c) = (w[0], w[1]);
                    let (fa, fc) = (self.eval(a), self.eval(c));
                    let r = if fa == 0.0 {
                        Some(a)
                    } else if fc == 0.0 {
                        Some(c)
                    } else if fa.signum() != fc.signum() {
                        Some(self.bisect(a, c))
                    } else {
                        None
                    };
                    if let Some(r) = r {
                        if roots.last().is_none_or(|l| (r - l).abs() > 1e-12 * (1.0 + r.abs())) {
                            roots.push(r);
                        }
                    }
                }
                roots
            }
        }
    }

    fn bisect(&self, mut a: f64, mut b: f64) -> f64 {
        let sa = self.eval(a).signum();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if self.eval(m).signum() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Global minimum over the real line; `None` if unbounded below.
    pub fn global_min(&self) -> Option<f64> {
        match self.degree() {
            None => Some(0.0),
            Some(0) => Some(self.coeffs[0]),
            Some(d) if d % 2 == 1 || self.leading() < 0.0 => None,
            Some(_) => self
                .derivative()
                .real_roots()
                .into_iter()
                .map(|r| self.eval(r))
                .reduce(f64::min),
        }
    }

    /// `max |p|` over `[a, b]`.
    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        let mut m = self.eval(a).abs().max(self.eval(b).abs());
        for r in self.derivative().real_roots() {
            if r > a && r < b {
                m = m.max(self.eval(r).abs());
            }
        }
        m
    }
}

/// Nonlinearity together with its potential (`F' = f`, `F(0) = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    f: Polynomial,
    fp: Polynomial,
    big_f: Polynomial,
}

impl Nonlinearity {
    pub fn new(f: Polynomial) -> Self {
        let fp = f.derivative();
        let big_f = f.antiderivative();
        Self { f, fp, big_f }
    }

    pub fn poly(&self) -> &Polynomial {
        &self.f
    }

    pub fn potential(&self) -> &Polynomial {
        &self.big_f
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        self.f.eval(y)
    }

    #[inline]
    pub fn prime(&self, y: f64) -> f64 {
        self.fp.eval(y)
    }

    #[inline]
    pub fn potential_eval(&self, y: f64) -> f64 {
        self.big_f.eval(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub f: Nonlinearity,
    pub g: Nonlinearity,
}

impl ModelParams {
    /// Rejects nonpositive or non-finite `ε`, `σ`, `α`. Structural checks on
    /// `f`, `g` are separate, see [`validate_assumptions`].
    pub fn new(epsilon: f64, sigma: f64, alpha: f64, f: Polynomial, g: Polynomial) -> Result<Self> {
        for (name, v) in [("epsilon", epsilon), ("sigma", sigma), ("alpha", alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if f.coeffs().iter().chain(g.coeffs()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("non-finite polynomial coefficient".into()));
        }
        Ok(Self { epsilon, sigma, alpha, f: Nonlinearity::new(f), g: Nonlinearity::new(g) })
    }

    /// `ε = σ = α = 1`, `f = g = y³ − y`.
    pub fn default_double_well() -> Self {
        Self::new(1.0, 1.0, 1.0, Polynomial::double_well(), Polynomial::double_well()).expect("valid defaults")
    }
}

/// Lower bounds `f' ≥ −c₀`, `F ≥ −c₁` for one nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub c0: f64,
    pub c1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    pub f: Bounds,
    pub g: Bounds,
}

fn check_poly(name: &str, n: &Nonlinearity) -> Result<Bounds> {
    let p = n.poly();
    let d = p.degree().unwrap_or(0);
    if d < 3 || d % 2 == 0 {
        return Err(Error::Assumption(format!("{name} must have odd degree >= 3, got degree {d}")));
    }
    if p.leading() <= 0.0 {
        return Err(Error::Assumption(format!("{name} must have a positive leading coefficient")));
    }
    let min_fp = p.derivative().global_min().expect("even degree, positive leading");
    let min_f = n.potential().global_min().expect("even degree, positive leading");
    Ok(Bounds { c0: (-min_fp).max(0.0), c1: (-min_f).max(0.0) })
}

/// Odd degree `≥ 3` and positive leading coefficient for both `f` and `g`,
/// plus the constants `c₀ = −min f'` and `c₁ = −min F`.
pub fn validate_assumptions(p: &ModelParams) -> Result<AssumptionReport> {
    Ok(AssumptionReport { f: check_poly("f", &p.f)?, g: check_poly("g", &p.g)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_well_values() {
        let f = Nonlinearity::new(Polynomial::double_well());
        assert_eq!(f.eval(2.0), 6.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert!((f.potential_eval(1.0) + 0.25).abs() < 1e-15);
        assert_eq!(f.prime(0.0), -1.0);
    }

    #[test]
    fn assumptions_examples() {
        let p = ModelParams::default_double_well();
        let r = validate_assumptions(&p).unwrap();
        assert!((r.f.c0 - 1.0).abs() < 1e-12);
        assert!((r.f.c1 - 0.25).abs() < 1e-12);

        let cubic = ModelParams::new(1.0, 1.0, 1.0, Polynomial::new(vec![0.0, 0.0, 0.0, 1.0]), Polynomial::double_well()).unwrap();
        assert_eq!(validate_assumptions(&cubic).unwrap().f.c0, 0.0);

        let neg = ModelParams::new(1.0, 1.0, 1.0, Polynomial::new(vec![0.0, 1.0, 0.0, -1.0]), Polynomial::double_well()).unwrap();
        assert!(matches!(validate_assumptions(&neg), Err(Error::Assumption(_))));
        let even = ModelParams::new(1.0, 1.0, 1.0, Polynomial::double_well(), Polynomial::new(vec![0.0, 0.0, 1.0])).unwrap();
        assert!(validate_assumptions(&even).is_err());
    }

    #[test]
    fn rejects_bad_scalars() {
        for (e, s, a) in [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0), (f64::NAN, 1.0, 1.0)] {
            assert!(ModelParams::new(e, s, a, Polynomial::double_well(), Polynomial::double_well()).is_err());
        }
    }

    #[test]
    fn roots_and_extrema() {
        let p = Polynomial::new(vec![-6.0, 11.0, -6.0, 1.0]);
        let r = p.real_roots();
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((Polynomial::double_well().derivative().max_abs_on(-1.5, 1.5) - 5.75).abs() < 1e-14);
        assert_eq!(Polynomial::new(vec![0.0, 1.0]).global_min(), None);
    }
}
