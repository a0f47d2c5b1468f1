//! Banded LU factorization with partial pivoting.
//!
//! Row `r` stores columns `r − kl ..= r + kl + ku`; the extra `kl`
//! superdiagonals absorb fill from row interchanges.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Assembles an `n × n` matrix with `kl` sub- and `ku` superdiagonals from
    /// `entry(row, col)`, called only inside the band, then factorizes it.
    pub fn factor(n: usize, kl: usize, ku: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, width, data: vec![0.0; n * width], piv: vec![0; n] };
        for r in 0..n {
            let lo = r.saturating_sub(kl);
            let hi = (r + ku).min(n - 1);
            for c in lo..=hi {
                let v = entry(r, c);
                lu.set(r, c, v);
            }
        }
        lu.decompose()?;
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[self.pos(r, c)]
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: f64) {
        let p = self.pos(r, c);
        self.data[p] = v;
    }

    fn decompose(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut scale = 0.0f64;
        for v in &self.data {
            scale = scale.max(v.abs());
        }
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            self.piv[k] = p;
            if !(best > scale * 1e-300) || !best.is_finite() {
                return Err(Error::SingularBand { row: k, pivot: best });
            }
            let cmax = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let a = self.get(k, c);
                    let b = self.get(p, c);
                    self.set(k, c, b);
                    self.set(p, c, a);
                }
            }
            let pivot = self.get(k, k);
            for r in k + 1..=last {
                let f = self.get(r, k) / pivot;
                self.set(r, k, f);
                if f != 0.0 {
                    for c in k + 1..=cmax {
                        let v = self.get(r, c) - f * self.get(k, c);
                        self.set(r, c, v);
                    }
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    b[r] -= self.get(r, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.get(k, c) * b[c];
            }
            b[k] = s / self.get(k, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(n: usize, kl: usize, ku: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = vec![vec![0.0; n]; n];
        for r in 0..n {
            for c in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                dense[r][c] = rng.gen_range(-1.0..1.0);
            }
        }
        let lu = BandedLu::factor(n, kl, ku, |r, c| dense[r][c]).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b: Vec<f64> = (0..n).map(|r| (0..n).map(|c| dense[r][c] * x[c]).sum()).collect();
        lu.solve(&mut b);
        let err = b.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "n={n} kl={kl} ku={ku} err={err}");
    }

    #[test]
    fn random_banded_systems() {
        for (s, &(n, kl, ku)) in [(5, 1, 1), (12, 2, 2), (30, 3, 1), (40, 1, 4), (50, 8, 8)].iter().enumerate() {
            check(n, kl, ku, s as u64);
        }
    }

    #[test]
    fn pivoting_needed() {
        // zero leading diagonal forces an interchange
        let a = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let lu = BandedLu::factor(3, 1, 1, |r, c| a[r][c]).unwrap();
        let mut b = [1.0, 2.0, 3.0];
        lu.solve(&mut b);
        assert!((b[0] - 0.0).abs() < 1e-14 && (b[1] - 1.0).abs() < 1e-14 && (b[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let a = [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let r = BandedLu::factor(3, 1, 1, |r, c| a[r][c]);
        assert!(matches!(r, Err(Error::SingularBand { .. })));
    }
}
