//! Small complex FFT for the periodic direction.
//!
//! Power-of-two lengths use an iterative radix-2 transform; other even
//! lengths fall back to a table-driven direct DFT.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub(crate) struct Fft {
    n: usize,
    // e^{-2πik/n}, k = 0..n
    roots: Vec<Complex64>,
}

impl Fft {
    pub(crate) fn new(n: usize) -> Self {
        let roots = (0..n)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Self { n, roots }
    }

    /// In-place forward transform `X_k = Σ x_m e^{-2πikm/n}`.
    pub(crate) fn forward(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.transform(data, scratch, false);
    }

    /// In-place inverse transform, normalized by `1/n`.
    pub(crate) fn inverse(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.transform(data, scratch, true);
        let s = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn root(&self, k: usize, inverse: bool) -> Complex64 {
        let w = self.roots[k % self.n];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    fn transform(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>, inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        if n.is_power_of_two() {
            let bits = n.trailing_zeros();
            for i in 0..n {
                let r = i.reverse_bits() >> (usize::BITS - bits);
                if r > i {
                    data.swap(i, r);
                }
            }
            let mut len = 2;
            while len <= n {
                let stride = n / len;
                for start in (0..n).step_by(len) {
                    for k in 0..len / 2 {
                        let w = self.root(k * stride, inverse);
                        let a = data[start + k];
                        let b = data[start + k + len / 2] * w;
                        data[start + k] = a + b;
                        data[start + k + len / 2] = a - b;
                    }
                }
                len <<= 1;
            }
        } else {
            scratch.clear();
            scratch.extend_from_slice(data);
            for (k, out) in data.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, x) in scratch.iter().enumerate() {
                    acc += *x * self.root(k * m, inverse);
                }
                *out = acc;
            }
        }
    }
}
