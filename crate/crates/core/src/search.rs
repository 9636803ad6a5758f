//! Derivative-free minimization used by the brute-force test oracles.
//!
//! The engine is a direct search that polls along a freshly drawn random
//! orthonormal basis at every step. Polling only the coordinate axes stalls
//! at kinks of group norms (the descent cone can miss every axis), so the
//! rotating basis matters here.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// SplitMix64, enough randomness for poll directions and test instances.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn normal(&mut self) -> f64 {
        // Box-Muller; u1 is kept away from zero
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        math::sqrt(-2.0 * math::ln(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
    /// Number of restarts from the incumbent with a fresh, smaller step.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            min_step: 1e-11,
            max_evals: 400_000,
            restarts: 3,
            seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

fn random_basis(n: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
        }
        let nv = math::sqrt(v.iter().map(|a| a * a).sum());
        if nv > 1e-8 {
            v.iter_mut().for_each(|a| *a /= nv);
            basis.push(v);
        }
    }
    basis
}

/// Minimize `f` starting at `x0`. Returns the best point seen.
pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &SearchOptions) -> SearchResult {
    let n = x0.len();
    let mut rng = SplitMix64::new(opts.seed);
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut evals = 1;
    if n == 0 {
        return SearchResult { x, value: fx, evals };
    }
    let mut trial = vec![0.0; n];
    let mut step0 = opts.initial_step;
    for _ in 0..=opts.restarts {
        let mut step = step0;
        while step >= opts.min_step && evals < opts.max_evals {
            let mut basis = random_basis(n, &mut rng);
            // coordinate axes too: solutions often sit on them
            for i in 0..n {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                basis.push(e);
            }
            let mut improved = false;
            'poll: for d in &basis {
                for sign in [1.0, -1.0] {
                    for (t, (xi, di)) in trial.iter_mut().zip(x.iter().zip(d)) {
                        *t = xi + sign * step * di;
                    }
                    let ft = f(&trial);
                    evals += 1;
                    if ft < fx {
                        fx = ft;
                        x.copy_from_slice(&trial);
                        improved = true;
                        break 'poll;
                    }
                }
            }
            if improved {
                step *= 2.0;
            } else {
                step *= 0.5;
            }
        }
        step0 *= 0.1;
    }
    SearchResult { x, value: fx, evals }
}

/// Golden-section search for a unimodal function on `[a, b]`, returning
/// `(argmin, min)`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (math::sqrt(5.0) - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol * (1.0 + math::abs(a) + math::abs(b)) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
