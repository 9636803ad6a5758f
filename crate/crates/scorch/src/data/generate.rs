//! Seeded synthetic instances. Every generator is a pure function of its
//! arguments: the same seed gives the same bytes.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use scorch_core::{Error, GroupStructure, Matrix, Result};

use super::{Dataset, GroundTruth};

/// FIR taps of the deconvolution operator.
pub const DECONV_FILTER: [f64; 4] = [1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::Config(format!("dimensions must be positive, got m={m}, n={n}")));
    }
    Ok(())
}

/// Logistic data with the default 5% label flips.
pub fn gen_logistic(m: usize, n: usize, seed: u64, sparsity: f64) -> Result<(Dataset, GroundTruth)> {
    gen_logistic_with(m, n, seed, sparsity, 0.05)
}

/// Standard normal design, `x*` with `round(sparsity·n)` entries of random
/// sign, labels `sign(⟨a_i, x*⟩)` each flipped with probability `flip_rate`.
pub fn gen_logistic_with(
    m: usize,
    n: usize,
    seed: u64,
    sparsity: f64,
    flip_rate: f64,
) -> Result<(Dataset, GroundTruth)> {
    check_dims(m, n)?;
    if !(0.0..=1.0).contains(&sparsity) || !(0.0..=1.0).contains(&flip_rate) {
        return Err(Error::Config(format!(
            "sparsity and flip rate must lie in [0, 1], got {sparsity} and {flip_rate}"
        )));
    }
    let mut r = rng(seed);
    let a = Matrix::from_fn(m, n, |_, _| normal(&mut r));
    let k = ((sparsity * n as f64).round() as usize).min(n);
    let mut x = vec![0.0; n];
    for j in sample(&mut r, n, k) {
        x[j] = if r.random::<bool>() { 1.0 } else { -1.0 };
    }
    let y = a
        .matvec(&x)
        .into_iter()
        .map(|z| {
            let s = if z >= 0.0 { 1.0 } else { -1.0 };
            if r.random::<f64>() < flip_rate {
                -s
            } else {
                s
            }
        })
        .collect();
    Ok((Dataset::new(a, y, "gen:logistic", Some(seed)), GroundTruth::new(x, vec![], vec![])))
}

/// Group-lasso data with 10% of the groups active.
pub fn gen_group_lasso(m: usize, n: usize, n_g: usize, seed: u64) -> Result<(Dataset, GroundTruth)> {
    gen_group_lasso_with(m, n, n_g, seed, 0.1)
}

/// Rows with AR(1) correlation `corr(A_i, A_j) = 0.5^{|i−j|}`, contiguous
/// equal groups, `y = A x* + 0.01 ε`.
///
/// `round(active_fraction·n_g)` groups (at least one) are active; each holds
/// `ceil(0.1·n/n_g)` nonzeros of random sign and magnitude in `[0.5, 10]`.
pub fn gen_group_lasso_with(
    m: usize,
    n: usize,
    n_g: usize,
    seed: u64,
    active_fraction: f64,
) -> Result<(Dataset, GroundTruth)> {
    check_dims(m, n)?;
    if n_g == 0 || n % n_g != 0 {
        return Err(Error::Config(format!("n = {n} is not divisible by n_g = {n_g}")));
    }
    if !(0.0..=1.0).contains(&active_fraction) {
        return Err(Error::Config(format!("active fraction must lie in [0, 1], got {active_fraction}")));
    }
    const RHO: f64 = 0.5;
    let mut r = rng(seed);
    let scale = (1.0 - RHO * RHO).sqrt();
    let mut a = Matrix::zeros(m, n);
    for i in 0..m {
        let row = a.row_mut(i);
        row[0] = normal(&mut r);
        for j in 1..n {
            row[j] = RHO * row[j - 1] + scale * normal(&mut r);
        }
    }
    let groups = GroupStructure::contiguous(n, n_g)?;
    let size = n / n_g;
    let n_active = ((active_fraction * n_g as f64).round() as usize).clamp(1, n_g);
    let per_group = ((size as f64 * 0.1).ceil() as usize).min(size);
    let mut active: Vec<usize> = sample(&mut r, n_g, n_active).into_vec();
    active.sort_unstable();
    let mut x = vec![0.0; n];
    for &g in &active {
        let members = &groups.groups()[g];
        for p in sample(&mut r, size, per_group) {
            let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
            x[members[p]] = sign * r.random_range(0.5..=10.0);
        }
    }
    let mut y = a.matvec(&x);
    for v in &mut y {
        *v += 0.01 * normal(&mut r);
    }
    Ok((
        Dataset::new(a, y, "gen:group-lasso", Some(seed)),
        GroundTruth::new(x, groups.groups().to_vec(), active),
    ))
}

/// Deconvolution data with `ceil(n/64)` spikes and noise level 0.01.
pub fn gen_deconvolution(n: usize, seed: u64) -> Result<(Dataset, GroundTruth)> {
    gen_deconvolution_with(n, seed, n.div_ceil(64), 0.01)
}

/// Lower-banded Toeplitz `A[i][j] = b[i − j]` with [`DECONV_FILTER`],
/// spikes uniform in `[−3, 3]`, `y = A x* + noise·ε`.
pub fn gen_deconvolution_with(n: usize, seed: u64, spikes: usize, noise: f64) -> Result<(Dataset, GroundTruth)> {
    if n < 16 {
        return Err(Error::Config(format!("deconvolution needs n >= 16, got {n}")));
    }
    if spikes > n || !(noise >= 0.0) {
        return Err(Error::Config(format!("invalid spikes={spikes} or noise={noise}")));
    }
    let mut r = rng(seed);
    let a = Matrix::from_fn(n, n, |i, j| {
        if i >= j && i - j < DECONV_FILTER.len() {
            DECONV_FILTER[i - j]
        } else {
            0.0
        }
    });
    let mut x = vec![0.0; n];
    let mut pos = sample(&mut r, n, spikes).into_vec();
    pos.sort_unstable();
    for p in pos {
        x[p] = r.random_range(-3.0..=3.0);
    }
    let mut y = a.matvec(&x);
    for v in &mut y {
        *v += noise * normal(&mut r);
    }
    Ok((Dataset::new(a, y, "gen:deconv", Some(seed)), GroundTruth::new(x, vec![], vec![])))
}
