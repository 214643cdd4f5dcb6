//! Linear convolution of real sequences, direct or by FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Below this product of lengths the direct double loop wins.
const DIRECT_WORK: usize = 1 << 14;

pub(crate) struct Convolver {
    planner: FftPlanner<f64>,
    plans: Vec<(usize, Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
    buf: Vec<Complex64>,
    prod: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Convolver {
    pub(crate) fn new() -> Self {
        Convolver {
            planner: FftPlanner::new(),
            plans: Vec::new(),
            buf: Vec::new(),
            prod: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn plan(&mut self, n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        if let Some((_, f, i)) = self.plans.iter().find(|(m, _, _)| *m == n) {
            return (f.clone(), i.clone());
        }
        let f = self.planner.plan_fft_forward(n);
        let i = self.planner.plan_fft_inverse(n);
        self.plans.push((n, f.clone(), i.clone()));
        (f, i)
    }

    /// `out[i] += Σ_j a[j] b[i − j]` for `i < out.len()`.
    pub(crate) fn convolve_add(&mut self, a: &[f64], b: &[f64], out: &mut [f64]) {
        if a.is_empty() || b.is_empty() || out.is_empty() {
            return;
        }
        if a.len() * b.len() <= DIRECT_WORK || a.len().min(b.len()) <= 16 {
            for (j, &aj) in a.iter().enumerate() {
                if aj == 0.0 || j >= out.len() {
                    continue;
                }
                let end = b.len().min(out.len() - j);
                for (o, &bk) in out[j..j + end].iter_mut().zip(&b[..end]) {
                    *o += aj * bk;
                }
            }
            return;
        }
        let full = a.len() + b.len() - 1;
        let n = fft_size(full);
        let (fwd, inv) = self.plan(n);
        // pack both real inputs into one complex transform
        self.buf.clear();
        self.buf.resize(n, Complex64::new(0.0, 0.0));
        for (z, &v) in self.buf.iter_mut().zip(a) {
            z.re = v;
        }
        for (z, &v) in self.buf.iter_mut().zip(b) {
            z.im = v;
        }
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        self.scratch.resize(scratch_len, Complex64::new(0.0, 0.0));
        fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        self.prod.clear();
        self.prod.resize(n, Complex64::new(0.0, 0.0));
        for k in 0..n {
            let zk = self.buf[k];
            let zm = self.buf[(n - k) % n].conj();
            let ak = (zk + zm) * 0.5;
            let bk = (zk - zm) * Complex64::new(0.0, -0.5);
            self.prod[k] = ak * bk;
        }
        inv.process_with_scratch(&mut self.prod, &mut self.scratch);
        let scale = 1.0 / n as f64;
        for (o, z) in out.iter_mut().zip(self.prod.iter()).take(full) {
            *o += z.re * scale;
        }
    }
}

/// Smallest `2^a 3^b ≥ m`.
fn fft_size(m: usize) -> usize {
    let mut best = m.next_power_of_two();
    let mut p3 = 1;
    while p3 < best {
        let mut v = p3;
        while v < m {
            v *= 2;
        }
        best = best.min(v);
        p3 *= 3;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                if i + j < len {
                    out[i + j] += x * y;
                }
            }
        }
        out
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(fft_size(32769), 34992);
        assert_eq!(fft_size(1024), 1024);
        assert_eq!(fft_size(1025), 1152);
    }

    #[test]
    fn fft_matches_naive() {
        let mut conv = Convolver::new();
        for (na, nb) in [(3, 5), (300, 200), (1000, 1000), (17, 2000)] {
            let a: Vec<f64> = (0..na).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0).collect();
            let b: Vec<f64> = (0..nb).map(|i| 1.0 / (1.0 + i as f64)).collect();
            let len = na + nb - 1;
            let mut got = vec![0.0; len];
            conv.convolve_add(&a, &b, &mut got);
            let want = naive(&a, &b, len);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-11, "{na}x{nb}: {g} vs {w}");
            }
            let mut short = vec![0.0; len / 2];
            conv.convolve_add(&a, &b, &mut short);
            for (g, w) in short.iter().zip(&want) {
                assert!((g - w).abs() < 1e-11);
            }
        }
    }
}
