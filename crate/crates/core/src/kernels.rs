//! Generalized self-concordant kernels and the smoothers built from them.
//!
//! A kernel `φ` satisfies `|φ'''(t)| ≤ M_φ φ''(t)^{ν/2}` on its domain. The
//! smoothed regularizer is the infimal convolution
//! `g_s(x) = β (g □ μ h(·/μ))(x)` with `h(z) = Σ λ_i φ(z_i)`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::groups::GroupStructure;
use crate::math;
use crate::search::{self, SearchOptions};

/// Lower clamp applied to every diagonal Hessian entry of a smoother.
pub const HESSIAN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `−√(1−t²)` on `[−1, 1]`
    Hellinger,
    /// `(1/p)√(1+p²t²) − 1`
    Hyperbolic { p: f64 },
    /// `7 / (22 √(t(1−t)))` on `[0, 1]`
    Arcsine,
    /// `½[√(1+4t²) − 1 + log((√(1+4t²)−1)/(2t²))]`
    OstrovskiiBach,
    /// `t²/2`
    Energy,
    /// `|t|^p / p` on `ℝ₊`, `p ∈ (1, 2)`
    Power { p: f64 },
    /// `log(1 + eᵗ)`
    Logistic,
    /// `e^{−t}`
    Exponential,
    /// `t log t − t` on `[0, ∞)`
    BoltzmannShannon,
    /// `t log t + (1−t) log(1−t)` on `[0, 1]`
    FermiDirac,
    /// `−½ log t` on `(0, ∞)`
    Burg,
    /// `½(t² − 4t + 3)` for `t ≤ 1`, `−log t` otherwise
    DePierroIusem,
}

/// Names accepted by [`catalog_kernel`].
pub const CATALOG: &[&str] = &[
    "hellinger",
    "hyperbolic-p1",
    "arcsine",
    "ostrovskii-bach",
    "energy",
    "power-1.5",
    "logistic",
    "exponential",
    "boltzmann-shannon",
    "fermi-dirac",
    "burg",
    "de-pierro-iusem",
];

const ARCSINE_C: f64 = 7.0 / 22.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingKernel {
    kind: KernelKind,
    m_phi: f64,
    nu: f64,
}

/// Look up a kernel by name, with its tabulated `(M_φ, ν)`.
pub fn catalog_kernel(name: &str) -> Result<SmoothingKernel> {
    use KernelKind::*;
    let (kind, m_phi, nu) = match name {
        "hellinger" => (Hellinger, 2.25, 4.0),
        "hyperbolic-p1" | "hyperbolic" => (Hyperbolic { p: 1.0 }, 2.0, 2.6),
        "arcsine" => (Arcsine, 2.02, 4.0),
        "ostrovskii-bach" => (OstrovskiiBach, 2.0 * core::f64::consts::SQRT_2, 3.0),
        "energy" => (Energy, 0.0, 3.0),
        "power-1.5" => (Power { p: 1.5 }, 4.0, 6.0),
        "logistic" => (Logistic, 1.0, 2.0),
        "exponential" => (Exponential, 1.0, 2.0),
        "boltzmann-shannon" => (BoltzmannShannon, 1.0, 4.0),
        "fermi-dirac" => (FermiDirac, 1.0, 4.0),
        "burg" => (Burg, 8.0, 3.0),
        "de-pierro-iusem" => (DePierroIusem, 4.0, 3.0),
        other => return Err(Error::UnknownKernel(other.to_string())),
    };
    Ok(SmoothingKernel { kind, m_phi, nu })
}

impl SmoothingKernel {
    pub fn new(kind: KernelKind, m_phi: f64, nu: f64) -> Result<Self> {
        if !(m_phi >= 0.0) || !m_phi.is_finite() {
            return Err(Error::Parameter(alloc::format!("M_phi must be >= 0, got {m_phi}")));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Parameter(alloc::format!("nu must be > 0, got {nu}")));
        }
        match kind {
            KernelKind::Hyperbolic { p } if !(p > 0.0) => {
                return Err(Error::Parameter(alloc::format!("hyperbolic p must be > 0, got {p}")))
            }
            KernelKind::Power { p } if !(p > 1.0 && p < 2.0) => {
                return Err(Error::Parameter(alloc::format!("power p must lie in (1,2), got {p}")))
            }
            _ => {}
        }
        Ok(Self { kind, m_phi, nu })
    }

    /// The p = 1 hyperbolic kernel `√(1+t²) − 1`.
    pub fn hyperbolic() -> Self {
        Self {
            kind: KernelKind::Hyperbolic { p: 1.0 },
            m_phi: 2.0,
            nu: 2.6,
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn m_phi(&self) -> f64 {
        self.m_phi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Same function, different constant (useful for testing the check).
    pub fn with_m_phi(mut self, m_phi: f64) -> Self {
        self.m_phi = m_phi;
        self
    }

    pub fn name(&self) -> String {
        use KernelKind::*;
        match self.kind {
            Hellinger => "hellinger".into(),
            Hyperbolic { p } => alloc::format!("hyperbolic-p{p}"),
            Arcsine => "arcsine".into(),
            OstrovskiiBach => "ostrovskii-bach".into(),
            Energy => "energy".into(),
            Power { p } => alloc::format!("power-{p}"),
            Logistic => "logistic".into(),
            Exponential => "exponential".into(),
            BoltzmannShannon => "boltzmann-shannon".into(),
            FermiDirac => "fermi-dirac".into(),
            Burg => "burg".into(),
            DePierroIusem => "de-pierro-iusem".into(),
        }
    }

    /// Bounds of the open interior of the domain.
    pub fn domain(&self) -> (f64, f64) {
        use KernelKind::*;
        match self.kind {
            Hellinger => (-1.0, 1.0),
            Arcsine | FermiDirac => (0.0, 1.0),
            Power { .. } | BoltzmannShannon | Burg => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn in_interior(&self, t: f64) -> bool {
        let (lo, hi) = self.domain();
        t > lo && t < hi
    }

    /// `φ(t)`, `+∞` outside the closed domain.
    pub fn value(&self, t: f64) -> f64 {
        use KernelKind::*;
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return f64::INFINITY;
        }
        let v = match self.kind {
            Hellinger => -math::sqrt((1.0 - t * t).max(0.0)),
            Hyperbolic { p } => math::sqrt(1.0 + p * p * t * t) / p - 1.0,
            Arcsine => ARCSINE_C / math::sqrt(t * (1.0 - t)),
            OstrovskiiBach => {
                let s = math::sqrt(1.0 + 4.0 * t * t);
                // (s−1)/(2t²) = 2/(s+1), finite at t = 0
                0.5 * (s - 1.0 + math::ln(2.0 / (s + 1.0)))
            }
            Energy => 0.5 * t * t,
            Power { p } => math::powf(t, p) / p,
            Logistic => math::softplus(t),
            Exponential => math::exp(-t),
            BoltzmannShannon => {
                if t == 0.0 {
                    0.0
                } else {
                    t * math::ln(t) - t
                }
            }
            FermiDirac => xlogx(t) + xlogx(1.0 - t),
            Burg => -0.5 * math::ln(t),
            DePierroIusem => {
                if t <= 1.0 {
                    0.5 * (t * t - 4.0 * t + 3.0)
                } else {
                    -math::ln(t)
                }
            }
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// `(φ', φ'', φ''')` at an interior point.
    pub fn derivatives(&self, t: f64) -> Result<[f64; 3]> {
        if !self.in_interior(t) {
            return Err(Error::Domain { point: t });
        }
        Ok(self.derivatives_unchecked(t))
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.derivatives_unchecked(t)[0]
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.derivatives_unchecked(t)[1]
    }

    pub fn d3(&self, t: f64) -> f64 {
        self.derivatives_unchecked(t)[2]
    }

    fn derivatives_unchecked(&self, t: f64) -> [f64; 3] {
        use KernelKind::*;
        match self.kind {
            Hellinger => {
                let q = 1.0 - t * t;
                let r = math::sqrt(q);
                [t / r, 1.0 / (q * r), 3.0 * t / (q * q * r)]
            }
            Hyperbolic { p } => {
                let q = 1.0 + p * p * t * t;
                let r = math::sqrt(q);
                [p * t / r, p / (q * r), -3.0 * p * p * p * t / (q * q * r)]
            }
            Arcsine => {
                let q = t * (1.0 - t);
                let dq = 1.0 - 2.0 * t;
                let r = math::sqrt(q);
                let q32 = q * r;
                let q52 = q * q32;
                let q72 = q * q52;
                [
                    -0.5 * ARCSINE_C * dq / q32,
                    ARCSINE_C * (0.75 * dq * dq / q52 + 1.0 / q32),
                    ARCSINE_C * (-1.875 * dq * dq * dq / q72 - 4.5 * dq / q52),
                ]
            }
            OstrovskiiBach => {
                let s = math::sqrt(1.0 + 4.0 * t * t);
                let sp = s + 1.0;
                [
                    2.0 * t / sp,
                    2.0 / (s * sp),
                    -8.0 * t * (2.0 * s + 1.0) / (s * s * s * sp * sp),
                ]
            }
            Energy => [t, 1.0, 0.0],
            Power { p } => [
                math::powf(t, p - 1.0),
                (p - 1.0) * math::powf(t, p - 2.0),
                (p - 1.0) * (p - 2.0) * math::powf(t, p - 3.0),
            ],
            Logistic => {
                let s = math::sigmoid(t);
                let v = s * (1.0 - s);
                [s, v, v * (1.0 - 2.0 * s)]
            }
            Exponential => {
                let e = math::exp(-t);
                [-e, e, -e]
            }
            BoltzmannShannon => [math::ln(t), 1.0 / t, -1.0 / (t * t)],
            FermiDirac => {
                let u = 1.0 - t;
                [
                    math::ln(t / u),
                    1.0 / (t * u),
                    -1.0 / (t * t) + 1.0 / (u * u),
                ]
            }
            Burg => [-0.5 / t, 0.5 / (t * t), -1.0 / (t * t * t)],
            DePierroIusem => {
                if t <= 1.0 {
                    [t - 2.0, 1.0, 0.0]
                } else {
                    [-1.0 / t, 1.0 / (t * t), -2.0 / (t * t * t)]
                }
            }
        }
    }

    /// Even kernels with `sup |φ'| ≤ 1` and `φ(0) = 0`: for these
    /// `|·| □ μφ(·/μ) = μφ(·/μ)` exactly, and the same holds radially for
    /// the Euclidean norm.
    pub fn has_unit_bounded_slope(&self) -> bool {
        matches!(
            self.kind,
            KernelKind::Hyperbolic { p } if p == 1.0
        ) || matches!(self.kind, KernelKind::OstrovskiiBach)
    }
}

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * math::ln(t)
    }
}

/// Outcome of [`self_concordance_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcordanceReport {
    pub holds: bool,
    /// `max |φ'''(t)| / φ''(t)^{ν/2}` over the grid.
    pub worst_ratio: f64,
    pub worst_at: f64,
}

/// Relative slack used by [`self_concordance_check`].
pub const CONCORDANCE_TOL: f64 = 1e-9;

/// Check `|φ'''| ≤ (1+tol) M_φ φ''^{ν/2}` on every grid point.
pub fn self_concordance_check(k: &SmoothingKernel, grid: &[f64]) -> Result<ConcordanceReport> {
    self_concordance_check_tol(k, grid, CONCORDANCE_TOL)
}

pub fn self_concordance_check_tol(
    k: &SmoothingKernel,
    grid: &[f64],
    tol: f64,
) -> Result<ConcordanceReport> {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_at = f64::NAN;
    let mut holds = true;
    for &t in grid {
        let [_, d2, d3] = k.derivatives(t)?;
        let scale = if d2 > 0.0 { math::powf(d2, 0.5 * k.nu) } else { 0.0 };
        let ratio = if math::abs(d3) == 0.0 {
            0.0
        } else if scale > 0.0 {
            math::abs(d3) / scale
        } else {
            f64::INFINITY
        };
        if ratio > worst_ratio || worst_at.is_nan() {
            worst_ratio = worst_ratio.max(ratio);
            if ratio >= worst_ratio {
                worst_at = t;
            }
        }
        if math::abs(d3) > (1.0 + tol) * k.m_phi * scale {
            holds = false;
        }
    }
    Ok(ConcordanceReport {
        holds,
        worst_ratio,
        worst_at,
    })
}

/// `M_g = n^{(3−ν)/2} μ^{ν/2−2} M_h` for `ν ≤ 3`, `μ^{4−3ν/2} M_h` for `ν > 3`.
pub fn m_g(n: usize, mu: f64, nu: f64, m_h: f64) -> f64 {
    if nu <= 3.0 {
        math::powf(n as f64, 0.5 * (3.0 - nu)) * math::powf(mu, 0.5 * nu - 2.0) * m_h
    } else {
        math::powf(mu, 4.0 - 1.5 * nu) * m_h
    }
}

/// `h(z) = Σ λ_i φ(z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableKernel {
    base: SmoothingKernel,
    weights: Vec<f64>,
}

impl SeparableKernel {
    pub fn new(base: SmoothingKernel, n: usize) -> Self {
        Self {
            base,
            weights: vec![1.0; n],
        }
    }

    pub fn with_weights(base: SmoothingKernel, weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Parameter(alloc::format!("kernel weight {i} must be positive, got {w}")));
        }
        Ok(Self { base, weights })
    }

    pub fn base(&self) -> &SmoothingKernel {
        &self.base
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `M_h = max_i λ_i^{1−ν/2} M_φ`.
    pub fn m_h(&self) -> f64 {
        let e = 1.0 - 0.5 * self.base.nu;
        self.weights
            .iter()
            .map(|&l| math::powf(l, e) * self.base.m_phi)
            .fold(0.0, f64::max)
    }
}

/// A multivariate potential for [`infconv_oracle`].
pub trait Potential {
    fn eval(&self, z: &[f64]) -> f64;
}

impl Potential for SeparableKernel {
    fn eval(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.weights)
            .map(|(&t, &l)| l * self.base.value(t))
            .sum()
    }
}

/// `h(z) = φ(‖z‖)`, the potential behind the group smoother.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialKernel(pub SmoothingKernel);

impl Potential for RadialKernel {
    fn eval(&self, z: &[f64]) -> f64 {
        let r = math::sqrt(z.iter().map(|v| v * v).sum());
        self.0.value(r)
    }
}

/// Where `λφ'` crosses ±1; `None` when it never does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeKnots {
    minus: Option<f64>,
    plus: Option<f64>,
}

fn interior_probes(lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let expo = |k: i32| math::powf(10.0, k as f64 / 8.0);
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => {
            for k in (-160..=80).rev() {
                pts.push(-expo(k));
            }
            pts.push(0.0);
            for k in -160..=80 {
                pts.push(expo(k));
            }
        }
        (true, false) => {
            for k in -160..=80 {
                pts.push(lo + expo(k));
            }
        }
        (false, true) => {
            for k in (-160..=80).rev() {
                pts.push(hi - expo(k));
            }
        }
        (true, true) => {
            let w = hi - lo;
            for k in (1..=120).rev() {
                pts.push(lo + w * 0.5 * expo(-k));
            }
            pts.push(lo + 0.5 * w);
            for k in 1..=120 {
                pts.push(hi - w * 0.5 * expo(-k));
            }
        }
    }
    pts.retain(|&t| t > lo && t < hi);
    pts
}

impl SlopeKnots {
    fn find(k: &SmoothingKernel, lambda: f64) -> Self {
        let (lo, hi) = k.domain();
        let probes = interior_probes(lo, hi);
        let slope = |t: f64| lambda * k.d1(t);
        let root = |target: f64| -> Option<f64> {
            let mut prev: Option<(f64, f64)> = None;
            for &t in &probes {
                let s = slope(t) - target;
                if s == 0.0 {
                    return Some(t);
                }
                if let Some((tp, sp)) = prev {
                    if sp < 0.0 && s > 0.0 {
                        let (mut a, mut b) = (tp, t);
                        for _ in 0..200 {
                            let m = 0.5 * (a + b);
                            if slope(m) - target < 0.0 {
                                a = m;
                            } else {
                                b = m;
                            }
                        }
                        return Some(0.5 * (a + b));
                    }
                }
                prev = Some((t, s));
            }
            None
        };
        Self {
            minus: root(-1.0),
            plus: root(1.0),
        }
    }
}

/// `inf_u |x − μu| + μλφ(u)` with its first two derivatives in `x`.
fn smoothed_abs(k: &SmoothingKernel, lambda: f64, knots: &SlopeKnots, mu: f64, x: f64) -> [f64; 3] {
    let t = x / mu;
    let (lo, hi) = k.domain();
    if k.in_interior(t) {
        let [d1, d2, _] = k.derivatives_unchecked(t);
        let s = lambda * d1;
        if (-1.0..=1.0).contains(&s) {
            return [mu * lambda * k.value(t), s, lambda * d2 / mu];
        }
    }
    let above = t >= hi || (k.in_interior(t) && lambda * k.d1(t) > 1.0);
    if above {
        let a = knots.plus.unwrap_or(hi);
        [x - mu * a + mu * lambda * k.value(a), 1.0, 0.0]
    } else {
        let b = knots.minus.unwrap_or(lo);
        [mu * b - x + mu * lambda * k.value(b), -1.0, 0.0]
    }
}

/// One additive piece of a smoothed regularizer.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothTerm {
    /// Smoothing of `β‖x‖₁` with a separable kernel.
    L1 {
        beta: f64,
        kernel: SeparableKernel,
        knots: Vec<SlopeKnots>,
    },
    /// Smoothing of `β_G Σ ω_j ‖x_j‖` with a radial kernel.
    Groups {
        beta_g: f64,
        groups: GroupStructure,
        kernel: SmoothingKernel,
    },
    /// Smoothing of the indicator of `{x ≥ l}` with the exponential kernel.
    LowerBound { lower: Vec<f64> },
}

/// `g_s`: value, gradient and diagonal Hessian oracles plus `(M_g, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedRegularizer {
    mu: f64,
    dim: usize,
    nu: f64,
    m_g: f64,
    terms: Vec<SmoothTerm>,
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Parameter(alloc::format!("mu must be > 0, got {mu}")));
    }
    Ok(())
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Parameter(alloc::format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

/// Smoothed `β‖x‖₁` with the p = 1 hyperbolic kernel:
/// componentwise `β(√(μ²+x²) − μ)`.
pub fn smooth_l1(mu: f64, n: usize, beta: f64) -> Result<SmoothedRegularizer> {
    smooth_l1_with_kernel(mu, SeparableKernel::new(SmoothingKernel::hyperbolic(), n), beta)
}

pub fn smooth_l1_with_kernel(mu: f64, kernel: SeparableKernel, beta: f64) -> Result<SmoothedRegularizer> {
    check_mu(mu)?;
    check_scale("beta", beta)?;
    let n = kernel.dim();
    let base = *kernel.base();
    let uniform = kernel.weights().iter().all(|&w| w == kernel.weights()[0]);
    let knots = if base.has_unit_bounded_slope() && kernel.weights().iter().all(|&w| w <= 1.0) {
        vec![
            SlopeKnots {
                minus: None,
                plus: None
            };
            if uniform { 1 } else { n }
        ]
    } else if uniform {
        vec![SlopeKnots::find(&base, kernel.weights().first().copied().unwrap_or(1.0))]
    } else {
        kernel
            .weights()
            .iter()
            .map(|&l| SlopeKnots::find(&base, l))
            .collect()
    };
    let m = m_g(n, mu, base.nu, kernel.m_h());
    Ok(SmoothedRegularizer {
        mu,
        dim: n,
        nu: base.nu,
        m_g: m,
        terms: vec![SmoothTerm::L1 { beta, kernel, knots }],
    })
}

/// Smoothed `β_G Σ ω_j ‖x_j‖` with the p = 1 hyperbolic kernel:
/// `β_G ω_j (√(μ² + ‖x_j‖²) − μ)` per group.
pub fn smooth_l2_groups(mu: f64, groups: GroupStructure, beta_g: f64) -> Result<SmoothedRegularizer> {
    smooth_l2_groups_with_kernel(mu, groups, beta_g, SmoothingKernel::hyperbolic())
}

pub fn smooth_l2_groups_with_kernel(
    mu: f64,
    groups: GroupStructure,
    beta_g: f64,
    kernel: SmoothingKernel,
) -> Result<SmoothedRegularizer> {
    check_mu(mu)?;
    check_scale("beta_G", beta_g)?;
    if !kernel.has_unit_bounded_slope() {
        return Err(Error::Unsupported(alloc::format!(
            "group smoothing needs an even kernel with |phi'| <= 1, got {}",
            kernel.name()
        )));
    }
    let n = groups.dim();
    let m = m_g(n, mu, kernel.nu, kernel.m_phi);
    Ok(SmoothedRegularizer {
        mu,
        dim: n,
        nu: kernel.nu,
        m_g: m,
        terms: vec![SmoothTerm::Groups {
            beta_g,
            groups,
            kernel,
        }],
    })
}

/// Smoothed sparse-group penalty `β‖x‖₁ + β_G Σ ω_j ‖x_j‖`.
pub fn smooth_sparse_group(
    mu: f64,
    groups: GroupStructure,
    beta: f64,
    beta_g: f64,
) -> Result<SmoothedRegularizer> {
    let n = groups.dim();
    smooth_l1(mu, n, beta)?.combine(smooth_l2_groups(mu, groups, beta_g)?)
}

/// Smoothed indicator of `{x ≥ l}`: `μ exp((l − x)/μ)` per coordinate.
pub fn smooth_lower_bound(mu: f64, lower: Vec<f64>) -> Result<SmoothedRegularizer> {
    check_mu(mu)?;
    let k = catalog_kernel("exponential")?;
    let n = lower.len();
    Ok(SmoothedRegularizer {
        mu,
        dim: n,
        nu: k.nu,
        m_g: m_g(n, mu, k.nu, k.m_phi),
        terms: vec![SmoothTerm::LowerBound { lower }],
    })
}

impl SmoothedRegularizer {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Self-concordance constant of `g_s` (the weight `β` is not folded in).
    pub fn m_g(&self) -> f64 {
        self.m_g
    }

    pub fn terms(&self) -> &[SmoothTerm] {
        &self.terms
    }

    /// Sum of two smoothers on the same space; `M_g` is the larger of the two.
    pub fn combine(mut self, other: Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension(alloc::format!(
                "smoothers of dimension {} and {}",
                self.dim,
                other.dim
            )));
        }
        if self.nu != other.nu {
            return Err(Error::Unsupported(alloc::format!(
                "sum of smoothers with different nu ({} and {})",
                self.nu,
                other.nu
            )));
        }
        if self.mu != other.mu {
            return Err(Error::Unsupported("sum of smoothers with different mu".into()));
        }
        self.m_g = self.m_g.max(other.m_g);
        self.terms.extend(other.terms);
        Ok(self)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        self.accumulate(x, Some(&mut v), None, None);
        v
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.accumulate(x, None, Some(&mut g), None);
        g
    }

    /// Diagonal of `∇²g_s`, each entry at least [`HESSIAN_FLOOR`].
    pub fn hessian_diag(&self, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        self.accumulate(x, None, None, Some(&mut h));
        h.iter_mut().for_each(|v| *v = v.max(HESSIAN_FLOOR));
        h
    }

    /// Value, gradient and floored Hessian diagonal in one pass.
    pub fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let mut v = 0.0;
        let mut g = vec![0.0; self.dim];
        let mut h = vec![0.0; self.dim];
        self.accumulate(x, Some(&mut v), Some(&mut g), Some(&mut h));
        h.iter_mut().for_each(|v| *v = v.max(HESSIAN_FLOOR));
        (v, g, h)
    }

    /// Upper bound on the spectral norm of `∇²g_s`, when one exists.
    pub fn curvature_bound(&self) -> Option<f64> {
        let mu = self.mu;
        let mut total = 0.0;
        for t in &self.terms {
            total += match t {
                SmoothTerm::L1 { beta, kernel, .. } if kernel.base().has_unit_bounded_slope() => {
                    // φ'' peaks at the origin for these kernels
                    let lmax = kernel.weights().iter().copied().fold(0.0, f64::max);
                    beta * lmax * kernel.base().d2(0.0) / mu
                }
                SmoothTerm::Groups {
                    beta_g,
                    groups,
                    kernel,
                } => {
                    let wmax = groups.weights().iter().copied().fold(0.0, f64::max);
                    beta_g * wmax * kernel.d2(0.0) / mu
                }
                _ => return None,
            };
        }
        Some(total)
    }

    /// The nonsmooth function being smoothed, evaluated at `x`.
    pub fn unsmoothed_value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| match t {
                SmoothTerm::L1 { beta, .. } => beta * x.iter().map(|v| math::abs(*v)).sum::<f64>(),
                SmoothTerm::Groups { beta_g, groups, .. } => beta_g * groups.weighted_norm_sum(x),
                SmoothTerm::LowerBound { lower } => {
                    if x.iter().zip(lower).all(|(a, l)| a >= l) {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
            })
            .sum()
    }

    fn accumulate(
        &self,
        x: &[f64],
        mut value: Option<&mut f64>,
        mut grad: Option<&mut Vec<f64>>,
        mut hess: Option<&mut Vec<f64>>,
    ) {
        let mu = self.mu;
        for term in &self.terms {
            match term {
                SmoothTerm::L1 { beta, kernel, knots } => {
                    let base = kernel.base();
                    let fast = matches!(base.kind(), KernelKind::Hyperbolic { p } if p == 1.0)
                        && kernel.weights().iter().all(|&w| w == 1.0);
                    for (i, &xi) in x.iter().enumerate() {
                        let [v, d1, d2] = if fast {
                            let r = math::sqrt(mu * mu + xi * xi);
                            // μ²/(μ²+x²)^{3/2}
                            [r - mu, xi / r, mu * mu / (r * r * r)]
                        } else {
                            let kn = &knots[if knots.len() == 1 { 0 } else { i }];
                            smoothed_abs(base, kernel.weights()[i], kn, mu, xi)
                        };
                        if let Some(acc) = value.as_deref_mut() {
                            *acc += beta * v;
                        }
                        if let Some(g) = grad.as_deref_mut() {
                            g[i] += beta * d1;
                        }
                        if let Some(h) = hess.as_deref_mut() {
                            h[i] += beta * d2;
                        }
                    }
                }
                SmoothTerm::Groups {
                    beta_g,
                    groups,
                    kernel,
                } => {
                    let hyper = matches!(kernel.kind(), KernelKind::Hyperbolic { .. });
                    for (g, w) in groups.iter() {
                        let c = beta_g * w;
                        let r2: f64 = g.iter().map(|&i| x[i] * x[i]).sum();
                        let r = math::sqrt(r2);
                        if hyper {
                            let s2 = mu * mu + r2;
                            let s = math::sqrt(s2);
                            if let Some(acc) = value.as_deref_mut() {
                                *acc += c * (s - mu);
                            }
                            if let Some(gr) = grad.as_deref_mut() {
                                for &i in g {
                                    gr[i] += c * x[i] / s;
                                }
                            }
                            if let Some(h) = hess.as_deref_mut() {
                                let s3 = s2 * s;
                                for &i in g {
                                    h[i] += c * (s2 - x[i] * x[i]) / s3;
                                }
                            }
                        } else {
                            let t = r / mu;
                            let [d1, d2, _] = kernel.derivatives_unchecked(t);
                            if let Some(acc) = value.as_deref_mut() {
                                *acc += c * mu * kernel.value(t);
                            }
                            if let Some(gr) = grad.as_deref_mut() {
                                if r > 0.0 {
                                    for &i in g {
                                        gr[i] += c * d1 * x[i] / r;
                                    }
                                }
                            }
                            if let Some(h) = hess.as_deref_mut() {
                                let radial = d2 / mu;
                                if r < 1e-150 {
                                    for &i in g {
                                        h[i] += c * radial;
                                    }
                                } else {
                                    let tangential = d1 / r;
                                    for &i in g {
                                        let q = x[i] * x[i] / r2;
                                        h[i] += c * (radial * q + tangential * (1.0 - q));
                                    }
                                }
                            }
                        }
                    }
                }
                SmoothTerm::LowerBound { lower } => {
                    for (i, (&xi, &l)) in x.iter().zip(lower).enumerate() {
                        let e = math::exp((l - xi) / mu);
                        if let Some(acc) = value.as_deref_mut() {
                            *acc += mu * e;
                        }
                        if let Some(g) = grad.as_deref_mut() {
                            g[i] -= e;
                        }
                        if let Some(h) = hess.as_deref_mut() {
                            h[i] += e / mu;
                        }
                    }
                }
            }
        }
    }
}

/// Brute-force estimate of `inf_w { g(w) + μ h((x − w)/μ) }`.
///
/// A grid of `grid_steps` points per coordinate over `search_box` locates a
/// starting point, which is then refined (golden section in 1-d, direct
/// search otherwise). Accuracy is roughly `(box width / steps)²` before
/// refinement; the refinement brings convex problems to ~1e-10.
pub fn infconv_oracle<H: Potential + ?Sized>(
    g: impl Fn(&[f64]) -> f64,
    h: &H,
    mu: f64,
    x: &[f64],
    search_box: (f64, f64),
    grid_steps: usize,
) -> f64 {
    let n = x.len();
    let (lo, hi) = search_box;
    let steps = grid_steps.max(2);
    let mut z = vec![0.0; n];
    let mut objective = |w: &[f64]| -> f64 {
        for i in 0..n {
            z[i] = (x[i] - w[i]) / mu;
        }
        let v = g(w) + mu * h.eval(&z);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let step = (hi - lo) / (steps - 1) as f64;
    if n == 1 {
        let mut best = (f64::INFINITY, lo);
        for k in 0..steps {
            let w = lo + step * k as f64;
            let v = objective(&[w]);
            if v < best.0 {
                best = (v, w);
            }
        }
        let a = (best.1 - step).max(lo);
        let b = (best.1 + step).min(hi);
        let (_, v) = search::golden_section(|w| objective(&[w]), a, b, 1e-15);
        return v.min(best.0);
    }
    // coarse grid, capped at ~1e6 evaluations
    let per_dim = {
        let mut s = steps;
        while s > 3 && math::powf(s as f64, n as f64) > 1e6 {
            s /= 2;
        }
        s
    };
    let coarse = (hi - lo) / (per_dim - 1) as f64;
    let mut idx = vec![0usize; n];
    let mut w = vec![lo; n];
    let mut best_w = w.clone();
    let mut best_v = f64::INFINITY;
    'grid: loop {
        for i in 0..n {
            w[i] = lo + coarse * idx[i] as f64;
        }
        let v = objective(&w);
        if v < best_v {
            best_v = v;
            best_w.copy_from_slice(&w);
        }
        for i in 0..n {
            idx[i] += 1;
            if idx[i] < per_dim {
                continue 'grid;
            }
            idx[i] = 0;
        }
        break;
    }
    let opts = SearchOptions {
        initial_step: coarse,
        min_step: 1e-12,
        ..SearchOptions::default()
    };
    let r = search::minimize(&mut objective, &best_w, &opts);
    r.value.min(best_v)
}
