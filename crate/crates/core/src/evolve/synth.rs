//! Summation of `Σ_k c_k e^{iκ_k x}` over equispaced `x`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::numeric::{C64, I};

const CHUNK: usize = 256;
const NEGLIGIBLE: f64 = 1e-280;

/// One exponential: `coef · e^{i kappa x}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Wave {
    pub coef: C64,
    pub kappa: C64,
}

/// Direct summation at `x_j = x0 + j dx`, `j < n`. Each chunk re-anchors its phasors.
pub(crate) fn direct_sum(waves: &[Wave], x0: f64, dx: f64, n: usize) -> Vec<C64> {
    if waves.is_empty() {
        return vec![C64::new(0.0, 0.0); n];
    }
    let steps: Vec<C64> = waves.iter().map(|w| (I * w.kappa * dx).exp()).collect();
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<C64>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let start = ci * CHUNK;
            let len = CHUNK.min(n - start);
            let xa = x0 + dx * start as f64;
            let mut acc = vec![C64::new(0.0, 0.0); len];
            for (w, s) in waves.iter().zip(&steps) {
                let mut z = w.coef * (I * w.kappa * xa).exp();
                if w.kappa.im * dx > 0.0 {
                    // decaying waves stop once negligible, before reaching subnormals
                    for a in acc.iter_mut() {
                        if z.norm_sqr() < NEGLIGIBLE {
                            break;
                        }
                        *a += z;
                        z *= s;
                    }
                } else {
                    for a in acc.iter_mut() {
                        *a += z;
                        z *= s;
                    }
                }
            }
            acc
        })
        .collect();
    parts.concat()
}

/// `Σ_k c_k e^{iκ_k x_j}` with `κ_k = start + k step` on `x_j = x0 + j dx`, where
/// `step · dx = 2π/len` for the transform length `len ≥ coefs.len()`. Returns `n ≤ len` values.
pub(crate) struct LatticeSum {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
}

impl LatticeSum {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { fft: planner.plan_fft_inverse(len), len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn eval(&self, coefs: &[C64], start: f64, step: f64, x0: f64, dx: f64, n: usize) -> Vec<C64> {
        assert!(coefs.len() <= self.len && n <= self.len);
        let mut buf = vec![C64::new(0.0, 0.0); self.len];
        for (k, (b, c)) in buf.iter_mut().zip(coefs).enumerate() {
            let kappa = start + step * k as f64;
            *b = c * (I * kappa * x0).exp();
        }
        self.fft.process(&mut buf);
        buf.truncate(n);
        for (j, v) in buf.iter_mut().enumerate() {
            *v *= (I * start * dx * j as f64).exp();
        }
        buf
    }
}

/// Smallest `2^a 3^b 5^c ≥ n`.
pub(crate) fn fast_length(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1usize;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut v = p35;
            while v < n {
                v *= 2;
            }
            best = best.min(v);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_length(1), 1);
        assert_eq!(fast_length(7), 8);
        assert_eq!(fast_length(11), 12);
        assert_eq!(fast_length(1001), 1024);
        assert_eq!(fast_length(1025), 1080);
        for n in [17usize, 999, 123_457] {
            let f = fast_length(n);
            assert!(f >= n && f < n + n / 4 + 2);
        }
    }

    #[test]
    fn lattice_sum_matches_direct_sum() {
        let len = 360;
        let dx = 0.05;
        let step = 2.0 * std::f64::consts::PI / (len as f64 * dx);
        let start = -150.5 * step;
        let coefs: Vec<C64> = (0..301)
            .map(|k| C64::new((0.37 * k as f64).sin(), (0.11 * k as f64).cos()) * (-(k as f64 - 150.0).powi(2) / 900.0).exp())
            .collect();
        let waves: Vec<Wave> = coefs
            .iter()
            .enumerate()
            .map(|(k, &c)| Wave { coef: c, kappa: C64::new(start + step * k as f64, 0.0) })
            .collect();
        let x0 = -3.3;
        let n = 250;
        let fast = LatticeSum::new(len).eval(&coefs, start, step, x0, dx, n);
        let slow = direct_sum(&waves, x0, dx, n);
        let worst = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn decaying_waves_are_summed_until_negligible() {
        let waves = [Wave { coef: C64::new(1.0, 0.0), kappa: C64::new(0.0, 2.0) }];
        let v = direct_sum(&waves, 0.0, 0.5, 2000);
        for (j, z) in v.iter().enumerate() {
            let want = (-2.0 * 0.5 * j as f64).exp();
            assert!((z.re - want).abs() <= 1e-13 * want + 1e-139, "{j}: {z} vs {want}");
        }
    }
}
